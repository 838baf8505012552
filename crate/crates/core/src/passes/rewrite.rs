use std::collections::{HashMap, HashSet};

use crate::ir::{BasicBlock, Instruction, IrFunction, Opcode, Value};

/// A semantics-preserving rewrite over one function.
pub trait Pass: Send + Sync {
    fn id(&self) -> &'static str;
    /// Returns true when the function changed.
    fn run(&self, f: &mut IrFunction) -> bool;
}

/// The built-in passes, in registry order.
pub fn registry() -> Vec<Box<dyn Pass>> {
    vec![
        Box::new(DeadCodeElim),
        Box::new(ConstFold),
        Box::new(MergeBlocks),
        Box::new(CastElim),
        Box::new(NoopStrip),
    ]
}

/// Replaces every use of `%name` with `with`, keeping each use's type.
fn replace_uses(f: &mut IrFunction, name: &str, with: &Value) {
    for inst in f.blocks.iter_mut().flat_map(|b| b.instructions.iter_mut()) {
        for op in &mut inst.operands {
            if matches!(&op.value, Value::Local(n) if n == name) {
                op.value = with.clone();
            }
        }
    }
}

/// Removes the instruction defining `%name`.
fn remove_def(f: &mut IrFunction, name: &str) {
    for b in &mut f.blocks {
        b.instructions.retain(|i| i.result.as_deref() != Some(name));
    }
}

/// Repeatedly finds a value that can be forwarded to a replacement and
/// rewrites its uses, until `find` yields nothing.
fn forward_values(f: &mut IrFunction, find: impl Fn(&IrFunction, &Instruction) -> Option<Value>) -> bool {
    let mut changed = false;
    loop {
        let hit = f.instructions().find_map(|i| {
            let name = i.result.clone()?;
            let with = find(f, i)?;
            // a value forwarded to itself would loop forever
            (with != Value::Local(name.clone())).then_some((name, with))
        });
        let Some((name, with)) = hit else { return changed };
        replace_uses(f, &name, &with);
        remove_def(f, &name);
        changed = true;
    }
}

pub struct DeadCodeElim;

impl Pass for DeadCodeElim {
    fn id(&self) -> &'static str {
        "dce"
    }

    fn run(&self, f: &mut IrFunction) -> bool {
        let mut changed = false;
        loop {
            let used: HashSet<String> = f
                .instructions()
                .flat_map(|i| i.operands.iter())
                .filter_map(|op| match &op.value {
                    Value::Local(n) => Some(n.clone()),
                    _ => None,
                })
                .collect();
            let mut removed = false;
            for b in &mut f.blocks {
                let before = b.instructions.len();
                b.instructions.retain(|i| {
                    !(i.opcode.is_pure()
                        && i.result.as_ref().map(|r| !used.contains(r)).unwrap_or(false))
                });
                removed |= b.instructions.len() != before;
            }
            if !removed {
                return changed;
            }
            changed = true;
        }
    }
}

fn int_width(ty: &str) -> Option<u32> {
    let bits: u32 = ty.strip_prefix('i')?.parse().ok()?;
    (1..=64).contains(&bits).then_some(bits)
}

fn int_literal(v: &Value) -> Option<i128> {
    match v {
        Value::Const(c) => match c.as_str() {
            "true" => Some(1),
            "false" => Some(0),
            s => s.parse().ok(),
        },
        _ => None,
    }
}

/// Two's-complement wrap to `bits`, as a signed value.
fn wrap(v: i128, bits: u32) -> i128 {
    let m = 1i128 << bits;
    let r = v.rem_euclid(m);
    if bits > 1 && r >= m / 2 {
        r - m
    } else {
        r
    }
}

fn unsigned(v: i128, bits: u32) -> i128 {
    v.rem_euclid(1i128 << bits)
}

fn render_int(v: i128, bits: u32) -> String {
    if bits == 1 {
        if v & 1 == 1 { "true" } else { "false" }.to_string()
    } else {
        v.to_string()
    }
}

/// Folds integer arithmetic, comparisons and selects on constant operands.
pub struct ConstFold;

impl ConstFold {
    fn fold(inst: &Instruction) -> Option<Value> {
        if inst.opcode == Opcode::Select {
            let cond = int_literal(&inst.operands[0].value)?;
            return Some(inst.operands[if cond != 0 { 1 } else { 2 }].value.clone());
        }
        let bits = int_width(&inst.ty)?;
        let a = wrap(int_literal(&inst.operands.first()?.value)?, bits);
        let b = wrap(int_literal(&inst.operands.get(1)?.value)?, bits);
        let (ua, ub) = (unsigned(a, bits), unsigned(b, bits));
        if inst.opcode == Opcode::ICmp {
            let r = match inst.predicate.as_deref()? {
                "eq" => a == b,
                "ne" => a != b,
                "slt" => a < b,
                "sle" => a <= b,
                "sgt" => a > b,
                "sge" => a >= b,
                "ult" => ua < ub,
                "ule" => ua <= ub,
                "ugt" => ua > ub,
                "uge" => ua >= ub,
                _ => return None,
            };
            return Some(Value::Const(render_int(r as i128, 1)));
        }
        let r = match inst.opcode {
            Opcode::Add => a + b,
            Opcode::Sub => a - b,
            Opcode::Mul => a * b,
            Opcode::And => a & b,
            Opcode::Or => a | b,
            Opcode::Xor => a ^ b,
            Opcode::SDiv | Opcode::SRem => {
                let min = -(1i128 << (bits - 1));
                if b == 0 || (a == min && b == -1) {
                    return None;
                }
                if inst.opcode == Opcode::SDiv { a / b } else { a % b }
            }
            Opcode::UDiv | Opcode::URem => {
                if ub == 0 {
                    return None;
                }
                if inst.opcode == Opcode::UDiv { ua / ub } else { ua % ub }
            }
            Opcode::Shl | Opcode::LShr | Opcode::AShr => {
                if ub >= bits as i128 {
                    return None;
                }
                match inst.opcode {
                    Opcode::Shl => a << ub,
                    Opcode::LShr => ua >> ub,
                    _ => a >> ub,
                }
            }
            _ => return None,
        };
        Some(Value::Const(render_int(wrap(r, bits), bits)))
    }
}

impl Pass for ConstFold {
    fn id(&self) -> &'static str {
        "constfold"
    }

    fn run(&self, f: &mut IrFunction) -> bool {
        forward_values(f, |_, i| ConstFold::fold(i))
    }
}

/// Merges a block into its unique predecessor when that predecessor ends in
/// an unconditional branch to it.
pub struct MergeBlocks;

impl MergeBlocks {
    fn candidate(f: &IrFunction) -> Option<(usize, usize)> {
        let index: HashMap<&str, usize> =
            f.blocks.iter().enumerate().map(|(i, b)| (b.label.as_str(), i)).collect();
        let mut preds: Vec<HashSet<usize>> = vec![HashSet::new(); f.blocks.len()];
        for (i, b) in f.blocks.iter().enumerate() {
            if let Some(t) = b.instructions.last() {
                for s in t.successors() {
                    preds[index[s]].insert(i);
                }
            }
        }
        f.blocks.iter().enumerate().find_map(|(i, b)| {
            let t = b.instructions.last()?;
            if t.opcode != Opcode::Br {
                return None;
            }
            let succ = index[t.successors()[0]];
            (succ != i && succ != 0 && preds[succ].len() == 1).then_some((i, succ))
        })
    }
}

impl Pass for MergeBlocks {
    fn id(&self) -> &'static str {
        "merge-blocks"
    }

    fn run(&self, f: &mut IrFunction) -> bool {
        let mut changed = false;
        while let Some((pred, succ)) = MergeBlocks::candidate(f) {
            let BasicBlock { label: succ_label, instructions } = f.blocks.remove(succ);
            let pred = if succ < pred { pred - 1 } else { pred };
            let pred_label = f.blocks[pred].label.clone();
            f.blocks[pred].instructions.pop();
            let mut forwarded = Vec::new();
            for inst in instructions {
                if inst.opcode == Opcode::Phi {
                    // a single predecessor leaves exactly one incoming value
                    if let Some(r) = &inst.result {
                        forwarded.push((r.clone(), inst.operands[0].value.clone()));
                    }
                } else {
                    f.blocks[pred].instructions.push(inst);
                }
            }
            for (name, with) in forwarded {
                replace_uses(f, &name, &with);
            }
            for inst in f.blocks.iter_mut().flat_map(|b| b.instructions.iter_mut()) {
                if inst.opcode == Opcode::Phi {
                    for op in &mut inst.operands {
                        if matches!(&op.value, Value::Label(l) if *l == succ_label) {
                            op.value = Value::Label(pred_label.clone());
                        }
                    }
                }
            }
            changed = true;
        }
        changed
    }
}

/// Removes casts to the operand's own type and `trunc` of a widening cast
/// back to the original type.
pub struct CastElim;

impl Pass for CastElim {
    fn id(&self) -> &'static str {
        "cast-elim"
    }

    fn run(&self, f: &mut IrFunction) -> bool {
        forward_values(f, |f, i| {
            if !i.opcode.is_cast() {
                return None;
            }
            let src = &i.operands[0];
            if src.ty == i.ty {
                return Some(src.value.clone());
            }
            if i.opcode != Opcode::Trunc {
                return None;
            }
            let Value::Local(name) = &src.value else { return None };
            let def = f.instructions().find(|d| d.result.as_deref() == Some(name.as_str()))?;
            let inner = def.operands.first()?;
            (matches!(def.opcode, Opcode::ZExt | Opcode::SExt) && inner.ty == i.ty)
                .then(|| inner.value.clone())
        })
    }
}

/// Forwards arithmetic identities (`x + 0`, `x * 1`, `x | 0`, ...) and
/// selects whose arms agree.
pub struct NoopStrip;

impl NoopStrip {
    fn identity_operand(i: &Instruction) -> Option<Value> {
        if i.opcode == Opcode::Select {
            let (a, b) = (&i.operands[1].value, &i.operands[2].value);
            return (a == b).then(|| a.clone());
        }
        if !i.opcode.is_binary() {
            return None;
        }
        let (a, b) = (&i.operands[0].value, &i.operands[1].value);
        let is = |v: &Value, options: &[&str]| matches!(v, Value::Const(c) if options.contains(&c.as_str()));
        use Opcode::*;
        match i.opcode {
            Add | Or | Xor if is(b, &["0"]) => Some(a.clone()),
            Add | Or | Xor if is(a, &["0"]) => Some(b.clone()),
            Sub | Shl | LShr | AShr if is(b, &["0"]) => Some(a.clone()),
            Mul | SDiv | UDiv if is(b, &["1"]) => Some(a.clone()),
            Mul if is(a, &["1"]) => Some(b.clone()),
            And if is(b, &["-1"]) => Some(a.clone()),
            FMul | FDiv if is(b, &["1.0", "1.000000e+00"]) => Some(a.clone()),
            _ => None,
        }
    }
}

impl Pass for NoopStrip {
    fn id(&self) -> &'static str {
        "noop-strip"
    }

    fn run(&self, f: &mut IrFunction) -> bool {
        forward_values(f, |_, i| NoopStrip::identity_operand(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_ir, print_ir, IrModule};

    fn run(pass: &dyn Pass, text: &str) -> IrModule {
        let mut m = parse_ir(text).unwrap();
        for f in m.functions.iter_mut().filter(|f| !f.is_declaration()) {
            pass.run(f);
        }
        // every rewrite must print to parseable IR
        let reparsed = parse_ir(&print_ir(&m)).unwrap();
        assert_eq!(reparsed, m);
        m
    }

    #[test]
    fn dce_removes_one_unused_pure_instruction() {
        let text = "define i32 @f(i32 %x, ptr %p) {\nentry:\n  %u = mul i32 %x, 7\n  store i32 %x, ptr %p\n  ret i32 %x\n}\n";
        let before = parse_ir(text).unwrap().instruction_count();
        let after = run(&DeadCodeElim, text).instruction_count();
        assert_eq!(before - after, 1);
    }

    #[test]
    fn dce_keeps_side_effects_and_cascades() {
        let text = "define void @f(i32 %x, ptr %p) {\nentry:\n  %a = add i32 %x, 1\n  %b = mul i32 %a, 2\n  call void @g(i32 %x)\n  store i32 %x, ptr %p\n  ret void\n}\n";
        let m = run(&DeadCodeElim, text);
        let ops: Vec<_> = m.functions[0].instructions().map(|i| i.opcode.clone()).collect();
        assert_eq!(ops, vec![Opcode::Call, Opcode::Store, Opcode::Ret]);
    }

    #[test]
    fn constfold_add_feeding_return() {
        let m = run(&ConstFold, "define i32 @f() {\nentry:\n  %a = add i32 2, 3\n  ret i32 %a\n}\n");
        let insts: Vec<_> = m.functions[0].instructions().collect();
        assert_eq!(insts.len(), 1);
        assert_eq!(insts[0].operands[0].value, Value::Const("5".into()));
    }

    #[test]
    fn constfold_wraps_and_compares() {
        let text = "define i1 @f() {\nentry:\n  %a = add i8 127, 1\n  %c = icmp slt i8 %a, 0\n  ret i1 %c\n}\n";
        let m = run(&ConstFold, text);
        let ret = m.functions[0].instructions().last().unwrap();
        assert_eq!(ret.operands[0].value, Value::Const("true".into()));
        assert_eq!(ConstFold::fold(&parse_ir("define i32 @f() {\nentry:\n  %a = sdiv i32 1, 0\n  ret i32 %a\n}\n").unwrap().functions[0].blocks[0].instructions[0]), None);
    }

    #[test]
    fn merge_blocks_joins_straight_line_chain() {
        let text = "define i32 @f(i32 %x) {\nentry:\n  br label %a\na:\n  %p = phi i32 [ %x, %entry ]\n  br label %b\nb:\n  %y = add i32 %p, 1\n  ret i32 %y\n}\n";
        let m = run(&MergeBlocks, text);
        let f = &m.functions[0];
        assert_eq!(f.blocks.len(), 1);
        assert_eq!(f.blocks[0].instructions[0].operands[0].value, Value::Local("x".into()));
    }

    #[test]
    fn merge_blocks_rewrites_successor_phis() {
        let text = "define i32 @f(i1 %c, i32 %x) {\nentry:\n  br i1 %c, label %a, label %join\na:\n  br label %mid\nmid:\n  br label %join\njoin:\n  %v = phi i32 [ 0, %entry ], [ %x, %mid ]\n  ret i32 %v\n}\n";
        let m = run(&MergeBlocks, text);
        let f = &m.functions[0];
        assert_eq!(f.blocks.len(), 3);
        let phi = &f.block("join").unwrap().instructions[0];
        assert_eq!(phi.operands[3].value, Value::Label("a".into()));
    }

    #[test]
    fn merge_blocks_leaves_loops_alone() {
        let text = "define void @f() {\nentry:\n  br label %loop\nloop:\n  br label %loop\n}\n";
        let m = run(&MergeBlocks, text);
        assert_eq!(m.functions[0].blocks.len(), 2);
    }

    #[test]
    fn cast_elim_forwards_round_trip_casts() {
        let text = "define i32 @f(i32 %x) {\nentry:\n  %w = sext i32 %x to i64\n  %n = trunc i64 %w to i32\n  %s = bitcast i32 %n to i32\n  ret i32 %s\n}\n";
        let m = run(&CastElim, text);
        let ret = m.functions[0].instructions().last().unwrap();
        assert_eq!(ret.operands[0].value, Value::Local("x".into()));
    }

    #[test]
    fn noop_strip_forwards_identities() {
        let text = "define i32 @f(i32 %x, i1 %c) {\nentry:\n  %a = add i32 %x, 0\n  %b = mul i32 1, %a\n  %s = select i1 %c, i32 %b, i32 %b\n  %k = sub i32 %s, 3\n  ret i32 %k\n}\n";
        let m = run(&NoopStrip, text);
        let insts: Vec<_> = m.functions[0].instructions().collect();
        assert_eq!(insts.len(), 2);
        assert_eq!(insts[0].operands[0].value, Value::Local("x".into()));
    }
}
