//! In-memory form of the textual IR subset.
//!
//! The accepted grammar is a line-oriented subset of LLVM's textual IR:
//!
//! ```text
//! ; ModuleID = 'name'
//! @g = private constant i32 7
//! declare double @sqrt(double)
//! define void @.omp_outlined.(ptr %a, i64 %n) {
//! entry:
//!   %x = load double, ptr %a
//!   %y = call double @sqrt(double %x)
//!   store double %y, ptr %a
//!   ret void
//! }
//! ```
//!
//! Supported opcodes are the integer/float binary operators, `icmp`/`fcmp`,
//! `alloca`, `load`, `store`, `getelementptr`, the casts, `select`, `phi`,
//! `call`, `br`, `switch`, `ret` and `unreachable`. Any other instruction is kept
//! as an [`Opcode::Unknown`] carrying the value names it mentions. Types are
//! opaque text tokens. Attributes, metadata attachments, alignment and
//! fast-math flags are dropped on ingestion.

mod parser;
mod printer;
mod region;

pub use parser::{parse_ir, IrError};
pub use printer::print_ir;
pub use region::{extract_regions, glob_match, DEFAULT_REGION_PATTERN};

use std::collections::{BTreeSet, HashSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IrModule {
    pub name: String,
    pub globals: Vec<GlobalConstant>,
    pub functions: Vec<IrFunction>,
}

/// A module-level `@name = <literal>` definition. The literal is kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalConstant {
    pub name: String,
    pub literal: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrFunction {
    pub name: String,
    pub ret_ty: String,
    pub params: Vec<Param>,
    /// Empty for declarations.
    pub blocks: Vec<BasicBlock>,
    pub is_outlined_region: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub ty: String,
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicBlock {
    pub label: String,
    pub instructions: Vec<Instruction>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    pub opcode: Opcode,
    pub result: Option<String>,
    /// The type token printed in the instruction's type slot: the operation
    /// type for arithmetic, the loaded type for `load`, the destination type for
    /// casts, the allocated type for `alloca`, the source element type for
    /// `getelementptr`, and the return type for `call`.
    pub ty: String,
    pub operands: Vec<Operand>,
    /// Comparison predicate for `icmp`/`fcmp`.
    pub predicate: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operand {
    pub ty: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    /// `%name`: a parameter or instruction result.
    Local(String),
    /// A literal such as `42`, `1.0e+00`, `null`, or a global constant `@g`.
    Const(String),
    /// `label %name`.
    Label(String),
    /// `@name` referring to a function.
    Function(String),
}

macro_rules! opcodes {
    ($($variant:ident => $text:literal),* $(,)?) => {
        #[derive(Debug, Clone, PartialEq, Eq, Hash)]
        pub enum Opcode {
            $($variant,)*
            /// `br i1 %c, label %t, label %f`; printed as `br`.
            CondBr,
            Unknown(String),
        }

        impl Opcode {
            pub fn mnemonic(&self) -> &str {
                match self {
                    $(Opcode::$variant => $text,)*
                    Opcode::CondBr => "br",
                    Opcode::Unknown(s) => s,
                }
            }

            /// Maps a mnemonic to a known opcode. `br` always maps to
            /// [`Opcode::Br`]; the parser decides between `Br` and `CondBr`.
            pub fn from_mnemonic(s: &str) -> Option<Opcode> {
                match s {
                    $($text => Some(Opcode::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

opcodes! {
    Add => "add", Sub => "sub", Mul => "mul", SDiv => "sdiv", UDiv => "udiv",
    SRem => "srem", URem => "urem", Shl => "shl", LShr => "lshr", AShr => "ashr",
    And => "and", Or => "or", Xor => "xor",
    FAdd => "fadd", FSub => "fsub", FMul => "fmul", FDiv => "fdiv", FRem => "frem",
    ICmp => "icmp", FCmp => "fcmp",
    Alloca => "alloca", Load => "load", Store => "store", GetElementPtr => "getelementptr",
    Trunc => "trunc", ZExt => "zext", SExt => "sext", FPTrunc => "fptrunc", FPExt => "fpext",
    FPToUI => "fptoui", FPToSI => "fptosi", UIToFP => "uitofp", SIToFP => "sitofp",
    PtrToInt => "ptrtoint", IntToPtr => "inttoptr", BitCast => "bitcast",
    AddrSpaceCast => "addrspacecast",
    Select => "select", Phi => "phi", Call => "call",
    Br => "br", Switch => "switch", Ret => "ret", Unreachable => "unreachable",
}

impl Opcode {
    pub fn is_binary(&self) -> bool {
        use Opcode::*;
        matches!(
            self,
            Add | Sub | Mul | SDiv | UDiv | SRem | URem | Shl | LShr | AShr | And | Or | Xor
                | FAdd | FSub | FMul | FDiv | FRem
        )
    }

    pub fn is_cast(&self) -> bool {
        use Opcode::*;
        matches!(
            self,
            Trunc | ZExt | SExt | FPTrunc | FPExt | FPToUI | FPToSI | UIToFP | SIToFP
                | PtrToInt | IntToPtr | BitCast | AddrSpaceCast
        )
    }

    pub fn is_terminator(&self) -> bool {
        matches!(
            self,
            Opcode::Br | Opcode::CondBr | Opcode::Switch | Opcode::Ret | Opcode::Unreachable
        )
    }

    /// Instructions without side effects, safe to delete when unused.
    pub fn is_pure(&self) -> bool {
        self.is_binary()
            || self.is_cast()
            || matches!(
                self,
                Opcode::ICmp
                    | Opcode::FCmp
                    | Opcode::Alloca
                    | Opcode::Load
                    | Opcode::GetElementPtr
                    | Opcode::Select
                    | Opcode::Phi
            )
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

impl Instruction {
    pub fn new(opcode: Opcode, result: Option<&str>, ty: &str, operands: Vec<Operand>) -> Self {
        Instruction {
            opcode,
            result: result.map(str::to_string),
            ty: ty.to_string(),
            operands,
            predicate: None,
        }
    }

    /// Type token of the value this instruction defines.
    pub fn result_type(&self) -> &str {
        match self.opcode {
            Opcode::Alloca | Opcode::GetElementPtr => "ptr",
            Opcode::ICmp | Opcode::FCmp => "i1",
            _ => &self.ty,
        }
    }

    /// Branch targets in successor order.
    pub fn successors(&self) -> Vec<&str> {
        if !self.opcode.is_terminator() {
            return Vec::new();
        }
        self.operands
            .iter()
            .filter_map(|op| match &op.value {
                Value::Label(l) => Some(l.as_str()),
                _ => None,
            })
            .collect()
    }

    /// The direct callee of a `call`, if any.
    pub fn callee(&self) -> Option<&str> {
        match (&self.opcode, self.operands.first()) {
            (Opcode::Call, Some(Operand { value: Value::Function(f), .. })) => Some(f),
            _ => None,
        }
    }
}

impl Operand {
    pub fn new(ty: &str, value: Value) -> Self {
        Operand { ty: ty.to_string(), value }
    }

    pub fn local(ty: &str, name: &str) -> Self {
        Operand::new(ty, Value::Local(name.to_string()))
    }

    pub fn constant(ty: &str, literal: &str) -> Self {
        Operand::new(ty, Value::Const(literal.to_string()))
    }

    pub fn label(name: &str) -> Self {
        Operand::new("label", Value::Label(name.to_string()))
    }
}

impl IrFunction {
    pub fn is_declaration(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn instruction_count(&self) -> usize {
        self.blocks.iter().map(|b| b.instructions.len()).sum()
    }

    pub fn instructions(&self) -> impl Iterator<Item = &Instruction> {
        self.blocks.iter().flat_map(|b| b.instructions.iter())
    }

    pub fn block(&self, label: &str) -> Option<&BasicBlock> {
        self.blocks.iter().find(|b| b.label == label)
    }

    /// A declaration carrying this function's signature.
    pub fn declaration(&self) -> IrFunction {
        IrFunction {
            name: self.name.clone(),
            ret_ty: self.ret_ty.clone(),
            params: self
                .params
                .iter()
                .map(|p| Param { ty: p.ty.clone(), name: None })
                .collect(),
            blocks: Vec::new(),
            is_outlined_region: false,
        }
    }

    /// Names of all locally defined values (parameters and results).
    pub fn defined_values(&self) -> HashSet<&str> {
        self.params
            .iter()
            .filter_map(|p| p.name.as_deref())
            .chain(self.instructions().filter_map(|i| i.result.as_deref()))
            .collect()
    }

    /// Every `@name` function symbol the body refers to, in sorted order.
    pub fn referenced_functions(&self) -> BTreeSet<&str> {
        self.instructions()
            .flat_map(|i| i.operands.iter())
            .filter_map(|op| match &op.value {
                Value::Function(f) => Some(f.as_str()),
                _ => None,
            })
            .collect()
    }
}

impl IrModule {
    pub fn function(&self, name: &str) -> Option<&IrFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn defined_functions(&self) -> impl Iterator<Item = &IrFunction> {
        self.functions.iter().filter(|f| !f.is_declaration())
    }

    pub fn instruction_count(&self) -> usize {
        self.functions.iter().map(IrFunction::instruction_count).sum()
    }
}
