//! Signature canonicalization for duplicate detection.
//!
//! Whitespace is collapsed by re-joining tokens with single spaces, and every
//! bound variable is renamed to `v0`, `v1`, ... in order of its first binding
//! occurrence. Binders are recognized after `forall`, `exists`, `exists!`
//! and `fun`, and in `{x : T | ...}` / `{x | ...}` subset types.

use std::collections::HashMap;

const BINDER_KEYWORDS: [&str; 4] = ["forall", "exists", "exists!", "fun"];

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn is_ident(tok: &str) -> bool {
    tok.chars()
        .next()
        .is_some_and(|c| c.is_alphabetic() || c == '_')
}

fn tokenize(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if is_ident_char(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            // `exists!` is one keyword
            if i < chars.len()
                && chars[i] == '!'
                && chars[start..i].iter().collect::<String>() == "exists"
            {
                i += 1;
            }
            out.push(chars[start..i].iter().collect());
        } else if "(){}[],|".contains(c) {
            out.push(c.to_string());
            i += 1;
        } else {
            let start = i;
            while i < chars.len()
                && !chars[i].is_whitespace()
                && !is_ident_char(chars[i])
                && !"(){}[],|".contains(chars[i])
            {
                i += 1;
            }
            out.push(chars[start..i].iter().collect());
        }
    }
    out
}

/// Names bound in the binder section starting at `start`, which ends at the
/// first depth-0 `,` or `=>`.
fn binder_names(tokens: &[String], start: usize, names: &mut Vec<String>) {
    let mut depth = 0usize;
    let mut in_type = false;
    for tok in &tokens[start..] {
        match tok.as_str() {
            "(" | "{" | "[" => {
                depth += 1;
                in_type = false;
            }
            ")" | "}" | "]" => {
                if depth == 0 {
                    return;
                }
                depth -= 1;
                in_type = depth > 0;
            }
            "," | "=>" if depth == 0 => return,
            ":" => in_type = true,
            t if !in_type && is_ident(t) && !BINDER_KEYWORDS.contains(&t) => {
                names.push(t.to_string())
            }
            _ => {}
        }
    }
}

/// Names bound by a subset type opening at `start` (the token after `{`).
fn subset_names(tokens: &[String], start: usize, names: &mut Vec<String>) {
    let mut candidate = Vec::new();
    for tok in &tokens[start..] {
        match tok.as_str() {
            ":" | "|" => {
                names.extend(candidate);
                return;
            }
            t if is_ident(t) && !BINDER_KEYWORDS.contains(&t) => candidate.push(t.to_string()),
            _ => return,
        }
    }
}

pub fn canonicalize(signature: &str) -> String {
    let tokens = tokenize(signature);
    let mut bound = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        if BINDER_KEYWORDS.contains(&tok.as_str()) {
            binder_names(&tokens, i + 1, &mut bound);
        } else if tok == "{" {
            subset_names(&tokens, i + 1, &mut bound);
        }
    }
    let mut renaming: HashMap<&str, String> = HashMap::new();
    for name in &bound {
        let next = renaming.len();
        renaming
            .entry(name.as_str())
            .or_insert_with(|| format!("v{next}"));
    }
    tokens
        .iter()
        .map(|t| {
            renaming
                .get(t.as_str())
                .cloned()
                .unwrap_or_else(|| t.clone())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn alpha_equivalent_signatures_match() {
        assert_eq!(canonicalize("forall n, P n"), canonicalize("forall m, P m"));
        assert_ne!(canonicalize("forall n, P n"), canonicalize("forall n, Q n"));
        assert_eq!(canonicalize("forall n, P n"), "forall v0 , P v0");
    }

    #[test]
    fn whitespace_and_typed_binders() {
        let a = "forall (l:list nat), {l':list nat | sorted l' /\\ permutation l' l}";
        let b = "forall  (xs : list nat),\n  {ys : list nat | sorted ys /\\ permutation ys xs}";
        assert_eq!(canonicalize(a), canonicalize(b));
        assert_eq!(
            canonicalize(a),
            "forall ( v0 : list nat ) , { v1 : list nat | sorted v1 /\\ permutation v1 v0 }"
        );
    }

    #[test]
    fn multiple_binders_and_types_are_not_renamed() {
        let a = "forall (a : nat) (l x : list nat), sorted x -> permutation x l";
        let b = "forall (b : nat) (m y : list nat), sorted y -> permutation y m";
        assert_eq!(canonicalize(a), canonicalize(b));
        assert!(canonicalize(a).contains("list nat"));
        assert_ne!(
            canonicalize("forall (a : nat), P a"),
            canonicalize("forall (a : bool), P a")
        );
    }

    #[test]
    fn free_variables_are_kept() {
        assert_ne!(canonicalize("P n"), canonicalize("P m"));
        assert_eq!(canonicalize("fun x => f x"), canonicalize("fun y => f y"));
    }

    proptest! {
        #[test]
        fn idempotent(s in "[a-z (){}:,|>=!-]{0,40}") {
            let once = canonicalize(&s);
            prop_assert_eq!(canonicalize(&once), once.clone());
        }

        #[test]
        fn idempotent_on_quantified(body in "[a-cPQ ]{0,12}", v in "[a-c]") {
            let s = format!("forall {v} (b : T), exists c, {body}");
            let once = canonicalize(&s);
            prop_assert_eq!(canonicalize(&once), once);
        }
    }
}
