use std::fs;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use super::{FlagSequence, PassError};
use crate::ir::parse_ir;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

/// A shell command template for an external optimizer.
///
/// Placeholders: `{in}` input path, `{passes}` comma-joined pass list,
/// `{flags}` the passes as `-name` flags, `{out}` an output path. Without
/// `{out}` the tool's standard output is taken as the result.
#[derive(Debug, Clone)]
pub struct ExternalDriver {
    pub template: String,
    pub timeout: Duration,
}

impl ExternalDriver {
    pub fn new(template: &str) -> Self {
        ExternalDriver { template: template.to_string(), timeout: DEFAULT_TIMEOUT }
    }

    fn render(&self, input: &Path, seq: &FlagSequence, output: &Path) -> Result<String, PassError> {
        let t = &self.template;
        if !t.contains("{in}") || !(t.contains("{passes}") || t.contains("{flags}")) {
            return Err(PassError::BadTemplate);
        }
        let flags: Vec<String> = seq.passes.iter().map(|p| format!("-{p}")).collect();
        Ok(t.replace("{in}", &shell_quote(&input.to_string_lossy()))
            .replace("{out}", &shell_quote(&output.to_string_lossy()))
            .replace("{passes}", &shell_quote(&seq.passes.join(",")))
            .replace("{flags}", &flags.join(" ")))
    }
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "'\\''"))
}

/// Runs the external tool on `region_path` and returns the IR it produces.
pub fn apply_sequence_external(
    region_path: &Path,
    seq: &FlagSequence,
    driver: &ExternalDriver,
) -> Result<String, PassError> {
    let scratch = tempfile::tempdir()?;
    let out_path = scratch.path().join("out.ll");
    let stdout_path = scratch.path().join("stdout");
    let stderr_path = scratch.path().join("stderr");
    let command = driver.render(region_path, seq, &out_path)?;
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&command)
        .stdin(Stdio::null())
        .stdout(fs::File::create(&stdout_path)?)
        .stderr(fs::File::create(&stderr_path)?)
        .spawn()?;
    let started = Instant::now();
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if started.elapsed() >= driver.timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Err(PassError::Timeout(driver.timeout));
        }
        thread::sleep(Duration::from_millis(5));
    };
    if !status.success() {
        return Err(PassError::ToolFailed {
            status: status.to_string(),
            diagnostics: fs::read_to_string(&stderr_path).unwrap_or_default().trim().to_string(),
        });
    }
    let text = if driver.template.contains("{out}") {
        fs::read_to_string(&out_path)?
    } else {
        fs::read_to_string(&stdout_path)?
    };
    parse_ir(&text)?;
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const REGION: &str = "define void @.omp_outlined.() {\nentry:\n  ret void\n}\n";

    fn region_file() -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.ll");
        fs::write(&path, REGION).unwrap();
        (dir, path)
    }

    #[test]
    fn copy_driver_is_identity() {
        let (_dir, path) = region_file();
        let seq = FlagSequence::explicit(1, &["dce", "constfold"]);
        let text = apply_sequence_external(&path, &seq, &ExternalDriver::new("cp {in} {out} # {passes}")).unwrap();
        assert_eq!(text, REGION);
        let via_stdout = apply_sequence_external(&path, &seq, &ExternalDriver::new("cat {in} # {flags}")).unwrap();
        assert_eq!(via_stdout, REGION);
    }

    #[test]
    fn nonzero_exit_carries_diagnostics() {
        let (_dir, path) = region_file();
        let driver = ExternalDriver::new("echo 'bad pass list' >&2; exit 4 # {in} {passes}");
        match apply_sequence_external(&path, &FlagSequence::identity(), &driver) {
            Err(PassError::ToolFailed { diagnostics, .. }) => assert_eq!(diagnostics, "bad pass list"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn timeout_is_enforced() {
        let (_dir, path) = region_file();
        let driver = ExternalDriver { timeout: Duration::from_millis(100), ..ExternalDriver::new("sleep 5 # {in} {passes}") };
        assert!(matches!(
            apply_sequence_external(&path, &FlagSequence::identity(), &driver),
            Err(PassError::Timeout(_))
        ));
    }

    #[test]
    fn unparseable_output_is_rejected() {
        let (_dir, path) = region_file();
        let driver = ExternalDriver::new("echo 'not ir at all' # {in} {passes}");
        assert!(matches!(
            apply_sequence_external(&path, &FlagSequence::identity(), &driver),
            Err(PassError::Unparseable(_))
        ));
    }

    #[test]
    fn template_needs_placeholders() {
        let (_dir, path) = region_file();
        assert!(matches!(
            apply_sequence_external(&path, &FlagSequence::identity(), &ExternalDriver::new("cat")),
            Err(PassError::BadTemplate)
        ));
    }

    #[test]
    fn real_optimizer_with_empty_sequence() {
        // runs only when an LLVM `opt` binary is installed
        let Ok(probe) = Command::new("opt").arg("--version").output() else { return };
        if !probe.status.success() {
            return;
        }
        let (_dir, path) = region_file();
        let driver = ExternalDriver::new("opt -S {in} -o {out} {flags}");
        let text = apply_sequence_external(&path, &FlagSequence::identity(), &driver).unwrap();
        assert!(parse_ir(&text).is_ok());
    }
}
