use std::collections::BTreeSet;

use super::*;

/// Name pattern of compiler-outlined parallel regions.
pub const DEFAULT_REGION_PATTERN: &str = ".omp_outlined.*";

/// Shell-style wildcard match supporting `*` and `?`.
pub fn glob_match(pattern: &str, name: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let s: Vec<char> = name.chars().collect();
    let (mut pi, mut si) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while si < s.len() {
        if pi < p.len() && (p[pi] == '?' || p[pi] == s[si]) {
            pi += 1;
            si += 1;
        } else if pi < p.len() && p[pi] == '*' {
            star = Some((pi, si));
            pi += 1;
        } else if let Some((sp, ss)) = star {
            pi = sp + 1;
            si = ss + 1;
            star = Some((sp, ss + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&c| c == '*')
}

/// Splits every defined function whose name matches `pattern` into its own
/// module, together with declarations for the functions it references and
/// the global constants it uses. Each region module is named
/// `<module>__<function>`.
pub fn extract_regions(module: &IrModule, pattern: &str) -> Vec<IrModule> {
    module
        .defined_functions()
        .filter(|f| glob_match(pattern, &f.name))
        .map(|f| {
            let mut region = f.clone();
            region.is_outlined_region = true;
            let mut functions = vec![region];
            for callee in f.referenced_functions() {
                if callee == f.name {
                    continue;
                }
                let decl = match module.function(callee) {
                    Some(g) => g.declaration(),
                    None => IrFunction {
                        name: callee.to_string(),
                        ret_ty: "void".to_string(),
                        params: Vec::new(),
                        blocks: Vec::new(),
                        is_outlined_region: false,
                    },
                };
                functions.push(decl);
            }
            let used: BTreeSet<&str> = f
                .instructions()
                .flat_map(|i| i.operands.iter())
                .filter_map(|op| match &op.value {
                    Value::Const(c) => c.strip_prefix('@'),
                    _ => None,
                })
                .collect();
            let globals = module
                .globals
                .iter()
                .filter(|g| used.contains(g.name.as_str()))
                .cloned()
                .collect();
            IrModule { name: format!("{}__{}", module.name, f.name), globals, functions }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glob_basics() {
        assert!(glob_match(".omp_outlined.*", ".omp_outlined."));
        assert!(glob_match(".omp_outlined.*", ".omp_outlined._debug__.3"));
        assert!(!glob_match(".omp_outlined.*", "main"));
        assert!(glob_match("k?rnel*", "kernel_1"));
        assert!(glob_match("*", ""));
        assert!(!glob_match("a*b", "acbd"));
        assert!(glob_match("a*b*c", "axxbyyc"));
    }

    fn fixture(names: &[&str]) -> IrModule {
        let mut text = String::from("; ModuleID = 'prog'\n@k = constant i32 4\n");
        for n in names {
            text.push_str(&format!(
                "define void @{n}(ptr %p) {{\nentry:\n  %v = load i32, ptr @k\n  call void @helper(ptr %p)\n  ret void\n}}\n"
            ));
        }
        text.push_str("declare void @helper(ptr)\n");
        parse_ir(&text).unwrap()
    }

    #[test]
    fn extracts_single_match() {
        let m = fixture(&["main", ".omp_outlined.0"]);
        let regions = extract_regions(&m, DEFAULT_REGION_PATTERN);
        assert_eq!(regions.len(), 1);
        let r = &regions[0];
        assert_eq!(r.defined_functions().count(), 1);
        assert_eq!(r.name, "prog__.omp_outlined.0");
        assert_eq!(r.functions[0].name, ".omp_outlined.0");
        assert!(r.function("helper").unwrap().is_declaration());
        assert_eq!(r.globals.len(), 1);
    }

    #[test]
    fn no_match_gives_empty_list() {
        let m = fixture(&["main"]);
        assert!(extract_regions(&m, DEFAULT_REGION_PATTERN).is_empty());
    }

    #[test]
    fn three_outlined_functions_give_three_regions() {
        let m = fixture(&["main", ".omp_outlined.", ".omp_outlined..1", ".omp_outlined..2"]);
        let regions = extract_regions(&m, DEFAULT_REGION_PATTERN);
        assert_eq!(regions.len(), 3);
        for r in &regions {
            assert_eq!(r.defined_functions().count(), 1);
            // region closure: every referenced symbol is defined or declared
            let f = r.defined_functions().next().unwrap();
            for callee in f.referenced_functions() {
                assert!(r.function(callee).is_some());
            }
            let reparsed = parse_ir(&print_ir(r)).unwrap();
            assert_eq!(&reparsed, r);
        }
    }

    #[test]
    fn custom_pattern() {
        let m = fixture(&["kernel_a", "kernel_b", "main"]);
        assert_eq!(extract_regions(&m, "kernel_*").len(), 2);
    }
}
