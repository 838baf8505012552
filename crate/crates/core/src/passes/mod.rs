//! Flag-sequence sampling and the built-in rewrite passes used to augment the
//! corpus with structurally different forms of the same region.

mod external;
mod rewrite;
mod sample;

pub use external::{apply_sequence_external, ExternalDriver, DEFAULT_TIMEOUT};
pub use rewrite::{registry, CastElim, ConstFold, DeadCodeElim, MergeBlocks, NoopStrip, Pass};
pub use sample::{read_manifest, sample_sequences, write_manifest, SamplerConfig};

use crate::ir::IrModule;

/// Identifier of a pass inside a flag sequence.
pub type PassId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceOrigin {
    Sampled,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlagSequence {
    pub id: u32,
    pub passes: Vec<PassId>,
    pub origin: SequenceOrigin,
}

impl FlagSequence {
    pub fn explicit(id: u32, passes: &[&str]) -> Self {
        FlagSequence {
            id,
            passes: passes.iter().map(|p| p.to_string()).collect(),
            origin: SequenceOrigin::Explicit,
        }
    }

    /// The empty sequence. Sequence id 0 is reserved for it.
    pub fn identity() -> Self {
        FlagSequence::explicit(0, &[])
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PassError {
    #[error("pass `{0}` is not a registered internal pass")]
    Unregistered(String),
    #[error("external tool exited with {status}: {diagnostics}")]
    ToolFailed { status: String, diagnostics: String },
    #[error("external tool timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("external tool produced unparseable IR: {0}")]
    Unparseable(#[from] crate::ir::IrError),
    #[error("driver template must contain `{{in}}` and `{{passes}}` or `{{flags}}`")]
    BadTemplate,
    #[error("malformed sequence manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Applies the passes of `seq` in order to every defined function.
pub fn apply_sequence_internal(module: &IrModule, seq: &FlagSequence) -> Result<IrModule, PassError> {
    let passes = registry();
    let resolved: Vec<&dyn Pass> = seq
        .passes
        .iter()
        .map(|id| {
            passes
                .iter()
                .find(|p| p.id() == id)
                .map(|p| p.as_ref())
                .ok_or_else(|| PassError::Unregistered(id.clone()))
        })
        .collect::<Result<_, _>>()?;
    let mut out = module.clone();
    for pass in resolved {
        for f in out.functions.iter_mut().filter(|f| !f.is_declaration()) {
            pass.run(f);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_ir, print_ir};

    const FIXTURE: &str = "define i32 @f(i32 %x) {\nentry:\n  %dead = mul i32 %x, %x\n  %a = add i32 2, 3\n  ret i32 %a\n}\n";

    #[test]
    fn empty_sequence_is_identity() {
        let m = parse_ir(FIXTURE).unwrap();
        assert_eq!(apply_sequence_internal(&m, &FlagSequence::identity()).unwrap(), m);
    }

    #[test]
    fn unregistered_pass_is_rejected() {
        let m = parse_ir(FIXTURE).unwrap();
        let seq = FlagSequence::explicit(1, &["dce", "licm"]);
        assert!(matches!(apply_sequence_internal(&m, &seq), Err(PassError::Unregistered(p)) if p == "licm"));
    }

    #[test]
    fn passes_compose_in_order() {
        let m = parse_ir(FIXTURE).unwrap();
        let out = apply_sequence_internal(&m, &FlagSequence::explicit(1, &["constfold", "dce"])).unwrap();
        assert_eq!(print_ir(&out), "; ModuleID = ''\n\ndefine i32 @f(i32 %x) {\nentry:\n  ret i32 5\n}\n");
    }
}
