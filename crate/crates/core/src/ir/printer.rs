use std::fmt::Write;

use super::*;

/// Renders a module in the canonical textual form accepted by [`parse_ir`].
pub fn print_ir(module: &IrModule) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "; ModuleID = '{}'", module.name);
    if !module.globals.is_empty() {
        out.push('\n');
        for g in &module.globals {
            let _ = writeln!(out, "@{} = {}", sym(&g.name), g.literal);
        }
    }
    for f in &module.functions {
        out.push('\n');
        let params: Vec<String> = f
            .params
            .iter()
            .map(|p| match &p.name {
                Some(n) => format!("{} %{}", p.ty, sym(n)),
                None => p.ty.clone(),
            })
            .collect();
        if f.is_declaration() {
            let _ = writeln!(out, "declare {} @{}({})", f.ret_ty, sym(&f.name), params.join(", "));
            continue;
        }
        let _ = writeln!(out, "define {} @{}({}) {{", f.ret_ty, sym(&f.name), params.join(", "));
        for (i, b) in f.blocks.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "{}:", sym(&b.label));
            for inst in &b.instructions {
                let _ = writeln!(out, "  {}", print_instruction(inst));
            }
        }
        out.push_str("}\n");
    }
    out
}

/// Quotes a symbol name when it contains characters outside the bare set.
fn sym(name: &str) -> String {
    let bare = !name.is_empty()
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '$' | '-'));
    if bare {
        name.to_string()
    } else {
        format!("\"{name}\"")
    }
}

fn value(v: &Value) -> String {
    match v {
        Value::Local(n) | Value::Label(n) => format!("%{}", sym(n)),
        Value::Function(n) => format!("@{}", sym(n)),
        Value::Const(c) => c.clone(),
    }
}

fn typed(op: &Operand) -> String {
    format!("{} {}", op.ty, value(&op.value))
}

pub(crate) fn print_instruction(inst: &Instruction) -> String {
    let lhs = inst.result.as_ref().map(|r| format!("%{} = ", sym(r))).unwrap_or_default();
    let ops = &inst.operands;
    let body = match &inst.opcode {
        op if op.is_binary() => {
            format!("{op} {} {}, {}", inst.ty, value(&ops[0].value), value(&ops[1].value))
        }
        op @ (Opcode::ICmp | Opcode::FCmp) => format!(
            "{op} {} {} {}, {}",
            inst.predicate.as_deref().unwrap_or("eq"),
            inst.ty,
            value(&ops[0].value),
            value(&ops[1].value)
        ),
        Opcode::Alloca => {
            let mut s = format!("alloca {}", inst.ty);
            for op in ops {
                let _ = write!(s, ", {}", typed(op));
            }
            s
        }
        Opcode::Load => format!("load {}, {}", inst.ty, typed(&ops[0])),
        Opcode::Store => format!("store {}, {}", typed(&ops[0]), typed(&ops[1])),
        Opcode::GetElementPtr => {
            let rest: Vec<String> = ops.iter().map(typed).collect();
            format!("getelementptr {}, {}", inst.ty, rest.join(", "))
        }
        op if op.is_cast() => format!("{op} {} to {}", typed(&ops[0]), inst.ty),
        Opcode::Select => {
            let rest: Vec<String> = ops.iter().map(typed).collect();
            format!("select {}", rest.join(", "))
        }
        Opcode::Phi => {
            let incoming: Vec<String> = ops
                .chunks(2)
                .map(|pair| format!("[ {}, {} ]", value(&pair[0].value), value(&pair[1].value)))
                .collect();
            format!("phi {} {}", inst.ty, incoming.join(", "))
        }
        Opcode::Call => {
            let args: Vec<String> = ops[1..].iter().map(typed).collect();
            format!("call {} {}({})", inst.ty, value(&ops[0].value), args.join(", "))
        }
        Opcode::Ret => match ops.first() {
            Some(op) => format!("ret {}", typed(op)),
            None => "ret void".to_string(),
        },
        Opcode::Br | Opcode::CondBr => {
            let rest: Vec<String> = ops.iter().map(typed).collect();
            format!("br {}", rest.join(", "))
        }
        Opcode::Switch => {
            let mut s = format!("switch {}, {} [", typed(&ops[0]), typed(&ops[1]));
            for pair in ops[2..].chunks(2) {
                let _ = write!(s, " {}, {}", typed(&pair[0]), typed(&pair[1]));
            }
            s.push_str(" ]");
            s
        }
        Opcode::Unreachable => "unreachable".to_string(),
        Opcode::Unknown(word) => {
            let rest: Vec<String> = ops.iter().map(|o| value(&o.value)).collect();
            if rest.is_empty() {
                word.clone()
            } else {
                format!("{word} {}", rest.join(", "))
            }
        }
        _ => unreachable!("all opcodes handled"),
    };
    format!("{lhs}{body}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_module_prints_header_only() {
        let m = IrModule { name: "m".into(), ..Default::default() };
        assert_eq!(print_ir(&m), "; ModuleID = 'm'\n");
    }

    #[test]
    fn quotes_unusual_names() {
        assert_eq!(sym(".omp_outlined."), ".omp_outlined.");
        assert_eq!(sym("a b"), "\"a b\"");
    }
}
