//! Random well-formed modular programs over bits and lists.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::ir::{program_load, Program};

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    &xs[rng.random_range(0..xs.len())]
}

fn atom_term(rng: &mut ChaCha8Rng, vars: &[String]) -> String {
    match rng.random_range(0..10) {
        0..=2 => "0".into(),
        3..=5 => "1".into(),
        6 => "[]".into(),
        _ => format!("[{}|{}]", pick(rng, vars), pick(rng, vars)),
    }
}

/// Module sources: `m0` is the root, every other module is imported by
/// one earlier module. Each module defines `preds_per_module` predicates
/// with `clauses_per_pred` clauses each; the first clause of a predicate
/// has no calls.
pub fn synth_sources(n_modules: usize, preds_per_module: usize, clauses_per_pred: usize, seed: u64) -> Vec<String> {
    assert!(n_modules >= 1 && preds_per_module >= 1 && clauses_per_pred >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arity: Vec<Vec<usize>> =
        (0..n_modules).map(|_| (0..preds_per_module).map(|_| rng.random_range(1..=3)).collect()).collect();
    let exported: Vec<Vec<usize>> = (0..n_modules)
        .map(|_| (0..preds_per_module).filter(|&j| j == 0 || rng.random_bool(0.4)).collect())
        .collect();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n_modules];
    for i in 1..n_modules {
        let parent = rng.random_range(0..i);
        children[parent].push(i);
    }

    let mut out = Vec::with_capacity(n_modules);
    for i in 0..n_modules {
        let mut s = String::new();
        let exports: Vec<String> = exported[i].iter().map(|&j| format!("p{i}_{j}/{}", arity[i][j])).collect();
        let _ = writeln!(s, ":- module(m{i}, [{}]).", exports.join(", "));
        for c in &children[i] {
            let _ = writeln!(s, ":- use_module(m{c}).");
        }
        // callable predicates: (module, pred)
        let mut callees: Vec<(usize, usize)> = (0..preds_per_module).map(|j| (i, j)).collect();
        for &c in &children[i] {
            callees.extend(exported[c].iter().map(|&j| (c, j)));
        }
        for j in 0..preds_per_module {
            for k in 0..clauses_per_pred {
                let mut pool: Vec<String> = Vec::new();
                let mut head = Vec::new();
                for a in 0..arity[i][j] {
                    let v = format!("X{a}");
                    pool.push(v.clone());
                    head.push(v);
                }
                pool.extend((0..2).map(|y| format!("Y{y}")));
                for a in 0..head.len() {
                    if rng.random_bool(0.25) {
                        head[a] = atom_term(&mut rng, &pool[..1.max(a)]);
                    }
                }
                let mut body = Vec::new();
                let n_lits = if k == 0 { rng.random_range(0..=1) } else { rng.random_range(1..=3) };
                for _ in 0..n_lits {
                    if k == 0 || rng.random_bool(0.35) {
                        let v = pick(&mut rng, &pool).clone();
                        let t = if rng.random_bool(0.2) { pick(&mut rng, &pool).clone() } else { atom_term(&mut rng, &pool) };
                        body.push(format!("{v} = {t}"));
                    } else {
                        let &(m, q) = pick(&mut rng, &callees);
                        let args: Vec<String> = (0..arity[m][q]).map(|_| pick(&mut rng, &pool).clone()).collect();
                        body.push(format!("p{m}_{q}({})", args.join(", ")));
                    }
                }
                let head = format!("p{i}_{j}({})", head.join(", "));
                if body.is_empty() {
                    let _ = writeln!(s, "{head}.");
                } else {
                    let _ = writeln!(s, "{head} :- {}.", body.join(", "));
                }
            }
        }
        out.push(s);
    }
    out
}

pub fn synth_program(n_modules: usize, preds_per_module: usize, clauses_per_pred: usize, seed: u64) -> Result<Program> {
    program_load(&synth_sources(n_modules, preds_per_module, clauses_per_pred, seed))
}
