use std::collections::HashSet;

use super::region::{glob_match, DEFAULT_REGION_PATTERN};
use super::*;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum IrError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("duplicate function `@{0}`")]
    DuplicateFunction(String),
    #[error("function `@{function}`: duplicate block label `{label}`")]
    DuplicateLabel { function: String, label: String },
    #[error("function `@{function}`: branch to undefined label `{label}`")]
    UndefinedLabel { function: String, label: String },
    #[error("function `@{function}`: value `%{value}` is never defined")]
    UndefinedValue { function: String, value: String },
    #[error("function `@{function}`: value `%{value}` defined twice")]
    DuplicateValue { function: String, value: String },
    #[error("function `@{function}`: block `{label}` does not end in a terminator")]
    MissingTerminator { function: String, label: String },
}

type Result<T> = std::result::Result<T, IrError>;

/// Parses IR text into a module. The module name comes from a
/// `; ModuleID = '...'` header when present.
pub fn parse_ir(text: &str) -> Result<IrModule> {
    let mut module = IrModule::default();
    let lines = logical_lines(text);
    let mut i = 0;
    while i < lines.len() {
        let line = &lines[i];
        let content = line.text.trim();
        if let Some(rest) = content.strip_prefix("; ModuleID =") {
            module.name = rest.trim().trim_matches('\'').to_string();
            i += 1;
            continue;
        }
        let content = strip_comment(content).trim();
        if content.is_empty() || is_ignored_toplevel(content) {
            i += 1;
            continue;
        }
        if content.starts_with('@') {
            module.globals.push(parse_global(content, line)?);
            i += 1;
        } else if let Some(rest) = content.strip_prefix("declare ") {
            let (ret_ty, name, params) = parse_signature(rest, line)?;
            module.functions.push(IrFunction {
                is_outlined_region: glob_match(DEFAULT_REGION_PATTERN, &name),
                name,
                ret_ty,
                params,
                blocks: Vec::new(),
            });
            i += 1;
        } else if let Some(rest) = content.strip_prefix("define ") {
            let header = rest.trim_end();
            let header = header
                .strip_suffix('{')
                .ok_or_else(|| syntax(line, line.indent + 1, "expected `{` after function header"))?;
            let (ret_ty, name, params) = parse_signature(header, line)?;
            let (blocks, next) = parse_body(&lines, i + 1, &name)?;
            module.functions.push(IrFunction {
                is_outlined_region: glob_match(DEFAULT_REGION_PATTERN, &name),
                name,
                ret_ty,
                params,
                blocks,
            });
            i = next;
        } else {
            return Err(syntax(line, line.indent + 1, "unexpected top-level construct"));
        }
    }
    resolve(&mut module)?;
    Ok(module)
}

struct Line {
    number: usize,
    indent: usize,
    text: String,
}

/// Splits into lines, joining `switch` jump tables that span several lines.
fn logical_lines(text: &str) -> Vec<Line> {
    let mut out: Vec<Line> = Vec::new();
    let mut pending: Option<Line> = None;
    for (idx, raw) in text.lines().enumerate() {
        if let Some(mut p) = pending.take() {
            p.text.push(' ');
            p.text.push_str(strip_comment(raw).trim());
            if raw.contains(']') {
                out.push(p);
            } else {
                pending = Some(p);
            }
            continue;
        }
        let indent = raw.len() - raw.trim_start().len();
        let line = Line { number: idx + 1, indent, text: raw.to_string() };
        let code = strip_comment(raw);
        let starts_switch = code.trim_start().starts_with("switch ") || code.contains(" switch ");
        if starts_switch && code.contains('[') && !code.contains(']') {
            pending = Some(Line { text: code.to_string(), ..line });
        } else {
            out.push(line);
        }
    }
    out.extend(pending);
    out
}

fn syntax(line: &Line, column: usize, message: &str) -> IrError {
    IrError::Syntax { line: line.number, column, message: message.to_string() }
}

fn is_ignored_toplevel(s: &str) -> bool {
    s.starts_with("source_filename")
        || s.starts_with("target ")
        || s.starts_with("attributes ")
        || s.starts_with('!')
        || s.starts_with('$')
        || s.starts_with("module asm")
        || s.starts_with("uselistorder")
        || (s.starts_with('%') && s.contains(" = type "))
}

/// Removes a trailing `;` comment, ignoring semicolons inside quotes.
fn strip_comment(s: &str) -> &str {
    let mut in_quote = false;
    for (i, c) in s.char_indices() {
        match c {
            '"' => in_quote = !in_quote,
            ';' if !in_quote => return &s[..i],
            _ => {}
        }
    }
    s
}

fn parse_global(content: &str, line: &Line) -> Result<GlobalConstant> {
    let (name, rest) = take_name(&content[1..])
        .ok_or_else(|| syntax(line, line.indent + 2, "expected global name"))?;
    let rest = rest.trim_start();
    let literal = rest
        .strip_prefix('=')
        .ok_or_else(|| syntax(line, line.indent + 1, "expected `=` in global definition"))?;
    Ok(GlobalConstant { name, literal: literal.trim().to_string() })
}

const LINKAGE_WORDS: &[&str] = &[
    "private", "internal", "external", "weak", "weak_odr", "linkonce", "linkonce_odr",
    "available_externally", "common", "extern_weak", "dso_local", "dso_preemptable",
    "hidden", "protected", "default", "local_unnamed_addr", "unnamed_addr", "fastcc", "ccc",
    "coldcc", "noundef", "zeroext", "signext", "inreg", "noalias", "nonnull", "dllimport",
    "dllexport",
];

/// Parses `[linkage...] <ret ty> @name(<params>) [attrs]`.
fn parse_signature(s: &str, line: &Line) -> Result<(String, String, Vec<Param>)> {
    let at = find_toplevel_char(s, '@')
        .ok_or_else(|| syntax(line, line.indent + 1, "expected function name"))?;
    let head: Vec<&str> = s[..at]
        .split_whitespace()
        .filter(|w| !LINKAGE_WORDS.contains(w))
        .collect();
    let ret_ty = head.join(" ");
    if ret_ty.is_empty() {
        return Err(syntax(line, line.indent + 1, "missing return type"));
    }
    let (name, rest) = take_name(&s[at + 1..])
        .ok_or_else(|| syntax(line, line.indent + at + 2, "bad function name"))?;
    let rest = rest.trim_start();
    if !rest.starts_with('(') {
        return Err(syntax(line, line.indent + at + 2, "expected parameter list"));
    }
    let close = matching_close(rest, 0)
        .ok_or_else(|| syntax(line, line.indent + at + 2, "unbalanced parameter list"))?;
    let mut params = Vec::new();
    for piece in split_toplevel(&rest[1..close], ',') {
        let piece = piece.trim();
        if piece.is_empty() || piece == "..." {
            continue;
        }
        let (ty, after) = take_type(piece)
            .ok_or_else(|| syntax(line, line.indent + 1, "bad parameter type"))?;
        let name = after
            .split_whitespace()
            .last()
            .and_then(|w| w.strip_prefix('%'))
            .and_then(|w| take_name(w).map(|(n, _)| n));
        params.push(Param { ty, name });
    }
    Ok((ret_ty, name, params))
}

fn parse_body(lines: &[Line], start: usize, function: &str) -> Result<(Vec<BasicBlock>, usize)> {
    let mut blocks: Vec<BasicBlock> = Vec::new();
    let mut i = start;
    while i < lines.len() {
        let line = &lines[i];
        let code = strip_comment(&line.text).trim();
        i += 1;
        if code.is_empty() {
            continue;
        }
        if code == "}" {
            if blocks.is_empty() {
                return Err(syntax(line, line.indent + 1, "function body has no blocks"));
            }
            return Ok((blocks, i));
        }
        if let Some(label) = code.strip_suffix(':').filter(|l| is_label_token(l)) {
            let label = label.trim_matches('"').to_string();
            if let Some(last) = blocks.last() {
                if !ends_in_terminator(last) {
                    return Err(IrError::MissingTerminator {
                        function: function.to_string(),
                        label: last.label.clone(),
                    });
                }
            }
            blocks.push(BasicBlock { label, instructions: Vec::new() });
            continue;
        }
        let inst = parse_instruction(code, line)?;
        match blocks.last_mut() {
            None => blocks.push(BasicBlock { label: String::new(), instructions: vec![inst] }),
            Some(b) if ends_in_terminator(b) => {
                return Err(syntax(line, line.indent + 1, "instruction after block terminator"));
            }
            Some(b) => b.instructions.push(inst),
        }
    }
    Err(IrError::Syntax {
        line: lines.last().map(|l| l.number).unwrap_or(0),
        column: 1,
        message: format!("unterminated body of `@{function}`"),
    })
}

fn ends_in_terminator(b: &BasicBlock) -> bool {
    b.instructions.last().map(|i| i.opcode.is_terminator()).unwrap_or(false)
}

fn is_label_token(s: &str) -> bool {
    !s.is_empty()
        && (s.chars().all(is_name_char)
            || (s.len() >= 2 && s.starts_with('"') && s.ends_with('"')))
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '$' | '-')
}

/// Reads a bare or quoted identifier (without its sigil).
fn take_name(s: &str) -> Option<(String, &str)> {
    if let Some(rest) = s.strip_prefix('"') {
        let end = rest.find('"')?;
        return Some((rest[..end].to_string(), &rest[end + 1..]));
    }
    let end = s.find(|c: char| !is_name_char(c)).unwrap_or(s.len());
    if end == 0 {
        return None;
    }
    Some((s[..end].to_string(), &s[end..]))
}

fn matching_close(s: &str, open_at: usize) -> Option<usize> {
    let mut depth = 0i32;
    let mut in_quote = false;
    for (i, c) in s[open_at..].char_indices() {
        match c {
            '"' => in_quote = !in_quote,
            '(' | '[' | '{' | '<' if !in_quote => depth += 1,
            ')' | ']' | '}' | '>' if !in_quote => {
                depth -= 1;
                if depth == 0 {
                    return Some(open_at + i);
                }
            }
            _ => {}
        }
    }
    None
}

fn find_toplevel_char(s: &str, needle: char) -> Option<usize> {
    let mut depth = 0i32;
    let mut in_quote = false;
    for (i, c) in s.char_indices() {
        match c {
            '"' => in_quote = !in_quote,
            _ if c == needle && depth == 0 && !in_quote => return Some(i),
            '(' | '[' | '{' | '<' if !in_quote => depth += 1,
            ')' | ']' | '}' | '>' if !in_quote => depth -= 1,
            _ => {}
        }
    }
    None
}

fn split_toplevel(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut in_quote = false;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '"' => in_quote = !in_quote,
            '(' | '[' | '{' | '<' if !in_quote => depth += 1,
            ')' | ']' | '}' | '>' if !in_quote => depth -= 1,
            _ if c == sep && depth == 0 && !in_quote => {
                out.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

/// Reads one type token from the front of `s`, returning it and the rest.
fn take_type(s: &str) -> Option<(String, &str)> {
    let s = s.trim_start();
    let first = s.chars().next()?;
    let mut end = if matches!(first, '[' | '{' | '<') {
        matching_close(s, 0)? + 1
    } else {
        let body = s.strip_prefix('%').map(|r| (1, r)).unwrap_or((0, s));
        let (n, _) = take_name(body.1)?;
        let quoted = body.1.starts_with('"');
        body.0 + n.len() + if quoted { 2 } else { 0 }
    };
    loop {
        let rest = &s[end..];
        if rest.starts_with('*') {
            end += 1;
        } else if rest.trim_start().starts_with("addrspace(") {
            let off = end + (rest.len() - rest.trim_start().len());
            end = matching_close(s, off + "addrspace".len())? + 1;
        } else {
            break;
        }
    }
    let ty: String = s[..end].split_whitespace().collect::<Vec<_>>().join(" ");
    Some((ty, &s[end..]))
}

const VALUE_ATTRS: &[&str] = &[
    "noundef", "nonnull", "signext", "zeroext", "noalias", "nocapture", "readonly",
    "writeonly", "readnone", "immarg", "returned", "inreg", "nofree", "nest", "swiftself",
    "volatile",
];

fn parse_value(s: &str, line: &Line) -> Result<Value> {
    let mut words: Vec<&str> = s.split_whitespace().collect();
    // drop attributes between the type and the value
    while words.len() > 1 {
        let w = words[0];
        if VALUE_ATTRS.contains(&w) || w.contains('(') && !w.starts_with('(') && is_attr_call(w) {
            words.remove(0);
        } else if w == "align" || w == "dereferenceable" {
            words.drain(..2.min(words.len() - 1));
        } else {
            break;
        }
    }
    let text = words.join(" ");
    if text.is_empty() {
        return Err(syntax(line, line.indent + 1, "missing operand value"));
    }
    if let Some(rest) = text.strip_prefix('%') {
        if let Some((n, tail)) = take_name(rest) {
            if tail.is_empty() {
                return Ok(Value::Local(n));
            }
        }
    }
    if let Some(rest) = text.strip_prefix('@') {
        if let Some((n, tail)) = take_name(rest) {
            if tail.is_empty() {
                return Ok(Value::Function(n));
            }
        }
    }
    Ok(Value::Const(text))
}

fn is_attr_call(w: &str) -> bool {
    ["byval(", "sret(", "dereferenceable(", "dereferenceable_or_null(", "align(", "elementtype(", "byref(", "preallocated(", "inalloca("]
        .iter()
        .any(|p| w.starts_with(p))
}

/// Parses `<ty> <value>`.
fn parse_typed(s: &str, line: &Line) -> Result<Operand> {
    let (ty, rest) =
        take_type(s).ok_or_else(|| syntax(line, line.indent + 1, "expected typed operand"))?;
    if ty == "label" {
        let v = parse_value(rest, line)?;
        return match v {
            Value::Local(l) => Ok(Operand::label(&l)),
            _ => Err(syntax(line, line.indent + 1, "expected `label %name`")),
        };
    }
    Ok(Operand { value: parse_value(rest, line)?, ty })
}

/// Drops `, align N` and `, !kind !N` trailers.
fn strip_trailers(pieces: Vec<&str>) -> Vec<&str> {
    pieces
        .into_iter()
        .filter(|p| {
            let t = p.trim_start();
            !(t.starts_with("align ") || t.starts_with('!') || t.starts_with("addrspace("))
        })
        .collect()
}

const FLAG_WORDS: &[&str] = &[
    "nsw", "nuw", "exact", "fast", "nnan", "ninf", "nsz", "arcp", "contract", "afn", "reassoc",
    "disjoint", "inbounds", "volatile", "inrange", "nusw", "samesign", "nneg", "atomic",
];

fn skip_flags(mut s: &str) -> &str {
    loop {
        let t = s.trim_start();
        match FLAG_WORDS.iter().find(|w| {
            t.strip_prefix(**w).map(|r| r.starts_with(' ')).unwrap_or(false)
        }) {
            Some(w) => s = &t[w.len()..],
            None => return t,
        }
    }
}

fn parse_instruction(code: &str, line: &Line) -> Result<Instruction> {
    let col = line.indent + 1;
    let (result, rhs) = match code.strip_prefix('%') {
        Some(rest) => {
            let (name, after) =
                take_name(rest).ok_or_else(|| syntax(line, col, "bad result name"))?;
            let after = after.trim_start();
            let rhs = after
                .strip_prefix('=')
                .ok_or_else(|| syntax(line, col, "expected `=` after result name"))?;
            (Some(name), rhs.trim())
        }
        None => (None, code),
    };
    let mut rhs = rhs;
    for prefix in ["tail ", "musttail ", "notail "] {
        if let Some(r) = rhs.strip_prefix(prefix) {
            rhs = r.trim_start();
        }
    }
    let word_end = rhs.find(char::is_whitespace).unwrap_or(rhs.len());
    let word = &rhs[..word_end];
    let rest = skip_flags(&rhs[word_end..]);
    let err = |m: &str| syntax(line, col, &format!("`{word}`: {m}"));

    let opcode = match Opcode::from_mnemonic(word) {
        Some(op) => op,
        None => return Ok(parse_unknown(word, result, rest)),
    };
    let mut inst = Instruction { opcode: opcode.clone(), result, ty: String::new(), operands: Vec::new(), predicate: None };
    let pieces = strip_trailers(split_toplevel(rest, ','));

    match opcode {
        op if op.is_binary() => {
            if pieces.len() != 2 {
                return Err(err("expected two operands"));
            }
            let a = parse_typed(pieces[0], line)?;
            let b = parse_value(pieces[1], line)?;
            inst.ty = a.ty.clone();
            inst.operands = vec![a, Operand { ty: inst.ty.clone(), value: b }];
        }
        Opcode::ICmp | Opcode::FCmp => {
            if pieces.len() != 2 {
                return Err(err("expected two operands"));
            }
            let first = skip_flags(pieces[0]);
            let (pred, typed) =
                first.split_once(char::is_whitespace).ok_or_else(|| err("missing predicate"))?;
            let a = parse_typed(typed, line)?;
            let b = parse_value(pieces[1], line)?;
            inst.predicate = Some(pred.to_string());
            inst.ty = a.ty.clone();
            inst.operands = vec![a.clone(), Operand { ty: a.ty, value: b }];
        }
        Opcode::Alloca => {
            let first = pieces.first().ok_or_else(|| err("missing type"))?;
            let first = first.trim_start().strip_prefix("inalloca ").unwrap_or(first);
            let (ty, tail) = take_type(first).ok_or_else(|| err("bad type"))?;
            if !tail.trim().is_empty() {
                return Err(err("unexpected tokens after type"));
            }
            inst.ty = ty;
            for p in &pieces[1..] {
                inst.operands.push(parse_typed(p, line)?);
            }
        }
        Opcode::Load => {
            if pieces.len() != 2 {
                return Err(err("expected `<ty>, ptr <p>`"));
            }
            let (ty, tail) = take_type(pieces[0]).ok_or_else(|| err("bad type"))?;
            if !tail.trim().is_empty() {
                return Err(err("unexpected tokens after type"));
            }
            inst.ty = ty;
            inst.operands.push(parse_typed(pieces[1], line)?);
        }
        Opcode::Store => {
            if pieces.len() != 2 {
                return Err(err("expected `<ty> <v>, ptr <p>`"));
            }
            inst.ty = "void".to_string();
            inst.operands.push(parse_typed(pieces[0], line)?);
            inst.operands.push(parse_typed(pieces[1], line)?);
        }
        Opcode::GetElementPtr => {
            if pieces.len() < 2 {
                return Err(err("expected `<ty>, ptr <p>, ...`"));
            }
            let (ty, tail) = take_type(pieces[0]).ok_or_else(|| err("bad type"))?;
            if !tail.trim().is_empty() {
                return Err(err("unexpected tokens after type"));
            }
            inst.ty = ty;
            for p in &pieces[1..] {
                inst.operands.push(parse_typed(skip_flags(p), line)?);
            }
        }
        op if op.is_cast() => {
            if pieces.len() != 1 {
                return Err(err("expected `<ty> <v> to <ty>`"));
            }
            let at = pieces[0].rfind(" to ").ok_or_else(|| err("missing `to`"))?;
            inst.operands.push(parse_typed(&pieces[0][..at], line)?);
            let (ty, _) = take_type(&pieces[0][at + 4..]).ok_or_else(|| err("bad target type"))?;
            inst.ty = ty;
        }
        Opcode::Select => {
            if pieces.len() != 3 {
                return Err(err("expected three operands"));
            }
            for p in &pieces {
                inst.operands.push(parse_typed(p, line)?);
            }
            inst.ty = inst.operands[1].ty.clone();
        }
        Opcode::Phi => {
            let (ty, tail) = take_type(rest).ok_or_else(|| err("bad type"))?;
            inst.ty = ty.clone();
            for group in split_toplevel(tail, ',') {
                let g = group.trim();
                if g.starts_with('!') {
                    continue;
                }
                let inner = g
                    .strip_prefix('[')
                    .and_then(|g| g.strip_suffix(']'))
                    .ok_or_else(|| err("expected `[ value, %label ]`"))?;
                let parts = split_toplevel(inner, ',');
                if parts.len() != 2 {
                    return Err(err("expected `[ value, %label ]`"));
                }
                let v = parse_value(parts[0], line)?;
                let l = match parse_value(parts[1], line)? {
                    Value::Local(l) => l,
                    _ => return Err(err("incoming block must be `%label`")),
                };
                inst.operands.push(Operand { ty: ty.clone(), value: v });
                inst.operands.push(Operand::label(&l));
            }
            if inst.operands.is_empty() {
                return Err(err("phi without incoming values"));
            }
        }
        Opcode::Call => parse_call(&mut inst, rest, line)?,
        Opcode::Ret => {
            let t = pieces.first().map(|p| p.trim()).unwrap_or("");
            if t == "void" {
                inst.ty = "void".to_string();
            } else {
                let op = parse_typed(t, line)?;
                inst.ty = op.ty.clone();
                inst.operands.push(op);
            }
        }
        Opcode::Br => {
            inst.ty = "void".to_string();
            match pieces.len() {
                1 => inst.operands.push(parse_typed(pieces[0], line)?),
                3 => {
                    inst.opcode = Opcode::CondBr;
                    for p in &pieces {
                        inst.operands.push(parse_typed(p, line)?);
                    }
                    if !matches!(inst.operands[1].value, Value::Label(_))
                        || !matches!(inst.operands[2].value, Value::Label(_))
                    {
                        return Err(err("branch targets must be labels"));
                    }
                }
                _ => return Err(err("expected one or three operands")),
            }
            if inst.opcode == Opcode::Br && !matches!(inst.operands[0].value, Value::Label(_)) {
                return Err(err("branch target must be a label"));
            }
        }
        Opcode::Switch => parse_switch(&mut inst, rest, line)?,
        Opcode::Unreachable => inst.ty = "void".to_string(),
        _ => unreachable!("all opcodes handled"),
    }
    Ok(inst)
}

fn parse_call(inst: &mut Instruction, rest: &str, line: &Line) -> Result<()> {
    let err = |m: &str| syntax(line, line.indent + 1, &format!("`call`: {m}"));
    // the callee is the first top-level sigil token directly followed by `(`
    let bytes = rest.as_bytes();
    let mut depth = 0i32;
    let mut callee_at = None;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' | b'[' | b'{' | b'<' => depth += 1,
            b')' | b']' | b'}' | b'>' => depth -= 1,
            b'@' | b'%' if depth == 0 => {
                if let Some((name, after)) = take_name(&rest[i + 1..]) {
                    if after.starts_with('(') {
                        callee_at = Some((i, name, rest.len() - after.len()));
                        break;
                    }
                    i += name.len();
                }
            }
            _ => {}
        }
        i += 1;
    }
    let (at, name, paren) = callee_at.ok_or_else(|| err("cannot find callee"))?;
    let head: Vec<&str> = rest[..at]
        .split_whitespace()
        .filter(|w| !LINKAGE_WORDS.contains(w) && !FLAG_WORDS.contains(w))
        .collect();
    let head = head.join(" ");
    let (ret_ty, _) = take_type(&head).ok_or_else(|| err("missing return type"))?;
    let close = matching_close(rest, paren).ok_or_else(|| err("unbalanced argument list"))?;
    inst.ty = ret_ty;
    let callee = if rest.as_bytes()[at] == b'@' {
        Value::Function(name)
    } else {
        Value::Local(name)
    };
    inst.operands.push(Operand { ty: "ptr".to_string(), value: callee });
    let args = &rest[paren + 1..close];
    if !args.trim().is_empty() {
        for a in split_toplevel(args, ',') {
            inst.operands.push(parse_typed(a, line)?);
        }
    }
    if inst.ty == "void" && inst.result.is_some() {
        return Err(err("void call cannot define a value"));
    }
    Ok(())
}

fn parse_switch(inst: &mut Instruction, rest: &str, line: &Line) -> Result<()> {
    let err = |m: &str| syntax(line, line.indent + 1, &format!("`switch`: {m}"));
    let open = find_toplevel_char(rest, '[').ok_or_else(|| err("missing jump table"))?;
    let close = matching_close(rest, open).ok_or_else(|| err("unbalanced jump table"))?;
    let head = split_toplevel(&rest[..open], ',');
    if head.len() != 2 {
        return Err(err("expected `<ty> <v>, label %default`"));
    }
    inst.ty = "void".to_string();
    let cond = parse_typed(head[0], line)?;
    let default = parse_typed(head[1], line)?;
    let case_ty = cond.ty.clone();
    inst.operands.push(cond);
    inst.operands.push(default);
    let table = rest[open + 1..close].replace(',', " ");
    let words: Vec<&str> = table.split_whitespace().collect();
    if !words.len().is_multiple_of(4) {
        return Err(err("malformed jump table entry"));
    }
    for entry in words.chunks(4) {
        if entry[2] != "label" || !entry[3].starts_with('%') {
            return Err(err("expected `<ty> <c>, label %dest`"));
        }
        let _ = &case_ty;
        inst.operands.push(Operand::constant(entry[0], entry[1]));
        let (l, _) = take_name(&entry[3][1..]).ok_or_else(|| err("bad label"))?;
        inst.operands.push(Operand::label(&l));
    }
    Ok(())
}

fn parse_unknown(word: &str, result: Option<String>, rest: &str) -> Instruction {
    let mut operands = Vec::new();
    let mut chars = rest.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c == '%' || c == '@' {
            if let Some((name, _)) = take_name(&rest[i + 1..]) {
                let value = if c == '%' { Value::Local(name.clone()) } else { Value::Function(name.clone()) };
                operands.push(Operand::new("opaque", value));
                let skip = if rest[i + 1..].starts_with('"') { name.len() + 2 } else { name.len() };
                for _ in 0..skip {
                    chars.next();
                }
            }
        }
    }
    Instruction {
        opcode: Opcode::Unknown(word.to_string()),
        result,
        ty: "opaque".to_string(),
        operands,
        predicate: None,
    }
}

/// Post-parse fixups and validation: names unnamed entry blocks, classifies
/// `@name` operands as functions or global constants, declares unresolved
/// callees, and checks labels and value definitions.
fn resolve(module: &mut IrModule) -> Result<()> {
    let mut seen = HashSet::new();
    for f in &module.functions {
        if !seen.insert(f.name.clone()) {
            return Err(IrError::DuplicateFunction(f.name.clone()));
        }
    }
    let globals: HashSet<String> = module.globals.iter().map(|g| g.name.clone()).collect();
    let mut implicit: Vec<IrFunction> = Vec::new();
    let mut implicit_names: HashSet<String> = HashSet::new();

    for f in &mut module.functions {
        if f.is_declaration() {
            continue;
        }
        if f.blocks[0].label.is_empty() {
            let labels: HashSet<&str> = f.blocks.iter().map(|b| b.label.as_str()).collect();
            let mut label = "entry".to_string();
            let mut k = 0;
            while labels.contains(label.as_str()) {
                label = format!("entry.{k}");
                k += 1;
            }
            f.blocks[0].label = label;
        }
        let mut labels = HashSet::new();
        for b in &f.blocks {
            if !labels.insert(b.label.clone()) {
                return Err(IrError::DuplicateLabel { function: f.name.clone(), label: b.label.clone() });
            }
            if !ends_in_terminator(b) {
                return Err(IrError::MissingTerminator { function: f.name.clone(), label: b.label.clone() });
            }
        }
        let mut defined = HashSet::new();
        for name in f.params.iter().filter_map(|p| p.name.clone()).chain(
            f.blocks.iter().flat_map(|b| b.instructions.iter()).filter_map(|i| i.result.clone()),
        ) {
            if !defined.insert(name.clone()) {
                return Err(IrError::DuplicateValue { function: f.name.clone(), value: name });
            }
        }
        for inst in f.blocks.iter_mut().flat_map(|b| b.instructions.iter_mut()) {
            if let Opcode::Unknown(_) = inst.opcode {
                // names captured from unknown syntax may be types or labels
                inst.operands.retain(|op| match &op.value {
                    Value::Local(v) => defined.contains(v),
                    _ => true,
                });
            }
            for op in &mut inst.operands {
                match &op.value {
                    Value::Label(l) if !labels.contains(l) => {
                        return Err(IrError::UndefinedLabel { function: f.name.clone(), label: l.clone() });
                    }
                    Value::Local(v) if !defined.contains(v) => {
                        return Err(IrError::UndefinedValue { function: f.name.clone(), value: v.clone() });
                    }
                    Value::Function(g) if globals.contains(g) && !seen.contains(g) => {
                        op.value = Value::Const(format!("@{g}"));
                    }
                    _ => {}
                }
            }
            let call_sig = (inst.opcode == Opcode::Call).then(|| {
                (inst.ty.clone(), inst.operands[1..].iter().map(|o| o.ty.clone()).collect::<Vec<_>>())
            });
            for (k, op) in inst.operands.iter().enumerate() {
                if let Value::Function(g) = &op.value {
                    if !seen.contains(g) && implicit_names.insert(g.clone()) {
                        let (ret_ty, params) = match (&call_sig, k) {
                            (Some((ret, args)), 0) => (ret.clone(), args.clone()),
                            _ => ("void".to_string(), Vec::new()),
                        };
                        implicit.push(IrFunction {
                            name: g.clone(),
                            ret_ty,
                            params: params.into_iter().map(|ty| Param { ty, name: None }).collect(),
                            blocks: Vec::new(),
                            is_outlined_region: glob_match(DEFAULT_REGION_PATTERN, g),
                        });
                    }
                }
            }
        }
    }
    module.functions.extend(implicit);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_empty_module() {
        let m = parse_ir("").unwrap();
        assert!(m.functions.is_empty());
        assert!(m.name.is_empty());
    }

    #[test]
    fn counts_single_block_function() {
        let m = parse_ir("define i32 @f() {\nentry:\n  %a = add i32 1, 2\n  ret i32 %a\n}\n").unwrap();
        assert_eq!(m.functions.len(), 1);
        assert_eq!(m.instruction_count(), 2);
        let f = &m.functions[0];
        assert_eq!(f.blocks[0].instructions[0].opcode, Opcode::Add);
        assert_eq!(f.blocks[0].instructions[0].operands[1], Operand::constant("i32", "2"));
    }

    #[test]
    fn reports_syntax_error_location() {
        let err = parse_ir("define i32 @f() {\nentry:\n  %a = add i32 1\n  ret i32 %a\n}\n").unwrap_err();
        match err {
            IrError::Syntax { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_function() {
        let text = "declare void @g()\ndeclare void @g()\n";
        assert_eq!(parse_ir(text).unwrap_err(), IrError::DuplicateFunction("g".into()));
    }

    #[test]
    fn rejects_branch_to_undefined_label() {
        let text = "define void @f() {\nentry:\n  br label %nowhere\n}\n";
        assert!(matches!(parse_ir(text).unwrap_err(), IrError::UndefinedLabel { .. }));
    }

    #[test]
    fn rejects_missing_terminator() {
        let text = "define void @f() {\nentry:\n  %a = add i32 1, 2\nnext:\n  ret void\n}\n";
        assert!(matches!(parse_ir(text).unwrap_err(), IrError::MissingTerminator { .. }));
    }

    #[test]
    fn rejects_undefined_value() {
        let text = "define i32 @f() {\nentry:\n  ret i32 %x\n}\n";
        assert!(matches!(parse_ir(text).unwrap_err(), IrError::UndefinedValue { .. }));
    }

    #[test]
    fn unknown_opcodes_keep_their_operands() {
        let text = "define i32 @f(i32 %x) {\nentry:\n  %y = freeze i32 %x\n  ret i32 %y\n}\n";
        let m = parse_ir(text).unwrap();
        let inst = &m.functions[0].blocks[0].instructions[0];
        assert_eq!(inst.opcode, Opcode::Unknown("freeze".into()));
        assert_eq!(inst.operands, vec![Operand::new("opaque", Value::Local("x".into()))]);
    }

    #[test]
    fn ingests_clang_style_output() {
        let text = r#"; ModuleID = 'stream.c'
source_filename = "stream.c"
target triple = "x86_64-unknown-linux-gnu"

%struct.ident_t = type { i32, i32, i32, i32, ptr }

@0 = private unnamed_addr constant [23 x i8] c";unknown;unknown;0;0;;\00", align 1

; Function Attrs: noinline nounwind
define internal void @.omp_outlined.(ptr noalias noundef %.global_tid., ptr noalias noundef %.bound_tid., ptr noundef nonnull align 8 dereferenceable(8) %a) #0 {
entry:
  %.global_tid..addr = alloca ptr, align 8
  store ptr %.global_tid., ptr %.global_tid..addr, align 8, !tbaa !5
  %0 = load ptr, ptr %a, align 8
  %arrayidx = getelementptr inbounds double, ptr %0, i64 3
  %1 = load double, ptr %arrayidx, align 8
  %mul = fmul fast double %1, 2.000000e+00
  %cmp = fcmp olt double %mul, 1.0
  %conv = fptosi double %mul to i32
  %lv = extractvalue { i32, i32 } undef, 0
  call void @__kmpc_for_static_init_4(ptr @0, i32 %conv)
  br i1 %cmp, label %then, label %exit

then:                                             ; preds = %entry
  switch i32 %conv, label %exit [
    i32 0, label %exit
    i32 1, label %then2
  ]

then2:
  br label %exit

exit:
  %p = phi double [ %mul, %entry ], [ 0.0, %then ], [ 1.0, %then2 ]
  ret void
}

declare void @__kmpc_for_static_init_4(ptr, i32)

attributes #0 = { noinline nounwind }
!5 = !{!6}
"#;
        let m = parse_ir(text).unwrap();
        assert_eq!(m.name, "stream.c");
        let f = m.function(".omp_outlined.").unwrap();
        assert!(f.is_outlined_region);
        assert_eq!(f.params.len(), 3);
        assert_eq!(f.params[2].name.as_deref(), Some("a"));
        assert_eq!(f.blocks.len(), 4);
        let call = f.instructions().find(|i| i.opcode == Opcode::Call).unwrap();
        assert_eq!(call.callee(), Some("__kmpc_for_static_init_4"));
        assert_eq!(call.operands[1].value, Value::Const("@0".into()));
        let sw = &f.blocks[1].instructions[0];
        assert_eq!(sw.successors(), vec!["exit", "exit", "then2"]);
        let unknown = f.instructions().find(|i| matches!(i.opcode, Opcode::Unknown(_))).unwrap();
        assert!(unknown.operands.is_empty());
        assert_eq!(m.functions.len(), 2);
    }

    #[test]
    fn implicit_declarations_for_unresolved_callees() {
        let text = "define double @f(double %x) {\nentry:\n  %y = call double @sqrt(double %x)\n  ret double %y\n}\n";
        let m = parse_ir(text).unwrap();
        let decl = m.function("sqrt").unwrap();
        assert!(decl.is_declaration());
        assert_eq!(decl.ret_ty, "double");
        assert_eq!(decl.params.len(), 1);
    }

    #[test]
    fn unnamed_entry_block_is_labelled() {
        let text = "define void @f() {\n  br label %1\n1:\n  ret void\n}\n";
        let m = parse_ir(text).unwrap();
        assert_eq!(m.functions[0].blocks[0].label, "entry");
        assert_eq!(m.functions[0].blocks[1].label, "1");
    }
}
