//! Property tests over generated terms and SSA functions.

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use unreach::eval::{eval, Observation};
use unreach::gen::{random_closed_value, random_term, random_vfunction, TermGen, VGen};
use unreach::rewrite::{apply_trace, normalize_unreachable};
use unreach::safety::{apply_substitution, is_safe, SafetyMode, Substitution};
use unreach::term::{
    alpha_eq, canonicalize, free_vars, is_closed, parse_term, print_term, substitute, Name, Term, VarSet,
};
use unreach::translate::{apply_translation, kh_proc, sample_inputs};
use unreach::values::ValuePool;
use unreach::vminus::{eval_vminus, parse_vminus, print_vminus, simplify_function_cfg, validate, VFunction, VOutcome};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn open_term() -> impl Strategy<Value = Term> {
    any::<u64>().prop_map(|s| random_term(&mut rng(s), &TermGen::open(5, &["a", "b", "x"])))
}

fn closed_term() -> impl Strategy<Value = Term> {
    any::<u64>().prop_map(|s| random_term(&mut rng(s), &TermGen::closed(6)))
}

fn closed_value() -> impl Strategy<Value = Term> {
    any::<u64>().prop_map(|s| random_closed_value(&mut rng(s)))
}

fn vfunction() -> impl Strategy<Value = VFunction> {
    any::<u64>().prop_map(|s| random_vfunction(&mut rng(s), &VGen::default()))
}

/// Rename every binder to a fresh `r<n>`, independently of the library's
/// own canonical form.
fn rename_bound(e: &Term, counter: &mut usize, env: &mut Vec<(Name, Name)>) -> Term {
    match e {
        Term::Var(x) => match env.iter().rev().find(|(old, _)| old == x) {
            Some((_, new)) => Term::Var(new.clone()),
            None => e.clone(),
        },
        Term::Lam(x, b) => {
            *counter += 1;
            let new = Name::new(&format!("r{counter}"));
            env.push((x.clone(), new.clone()));
            let body = rename_bound(b, counter, env);
            env.pop();
            Term::Lam(new, Arc::new(body))
        }
        _ => {
            let mut out = e.clone();
            for (i, c) in e.children().into_iter().enumerate() {
                out = out.with_child(i, Arc::new(rename_bound(c, counter, env))).unwrap();
            }
            out
        }
    }
}

fn renamed(e: &Term) -> Term {
    rename_bound(e, &mut 0, &mut Vec::new())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn print_parse_roundtrip(e in open_term()) {
        let back = parse_term(&print_term(&e)).unwrap();
        prop_assert_eq!(&back, &e);
        prop_assert_eq!(free_vars(&back), free_vars(&e));
    }

    #[test]
    fn substituting_an_absent_variable_is_identity(e in open_term(), v in closed_value()) {
        let x = Name::new("absent");
        prop_assert!(alpha_eq(&substitute(&e, &x, &v), &e));
    }

    #[test]
    fn substitution_free_variables(e in open_term(), v in closed_value(), w in open_term()) {
        let x = Name::new("x");
        let fv_e: VarSet = free_vars(&e).into_iter().filter(|y| y != &x).collect();
        prop_assert!(free_vars(&substitute(&e, &x, &v)).is_subset(&fv_e));
        // With an open replacement, capture must be avoided.
        let mut bound = fv_e.clone();
        bound.extend(free_vars(&w));
        prop_assert!(free_vars(&substitute(&e, &x, &w)).is_subset(&bound));
    }

    #[test]
    fn alpha_eq_is_an_equivalence(a in open_term(), b in open_term()) {
        let a1 = renamed(&a);
        let a2 = canonicalize(&a);
        prop_assert!(alpha_eq(&a, &a));
        prop_assert!(alpha_eq(&a, &a1) && alpha_eq(&a1, &a));
        prop_assert!(alpha_eq(&a1, &a2) && alpha_eq(&a, &a2));
        prop_assert_eq!(alpha_eq(&a, &b), alpha_eq(&b, &a));
        if alpha_eq(&a, &b) {
            prop_assert!(alpha_eq(&a1, &b));
        }
    }

    #[test]
    fn evaluation_is_alpha_stable(e in closed_term()) {
        let a = eval(&e, 2_000).unwrap();
        let b = eval(&renamed(&e), 2_000).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn normalize_is_idempotent_and_replays(e in open_term()) {
        for mode in [SafetyMode::Syntactic, SafetyMode::Integer] {
            let (out, trace) = normalize_unreachable(&e, mode);
            let replayed = apply_trace(&e, &trace, mode).unwrap();
            prop_assert!(alpha_eq(&replayed, &out));
            let (again, more) = normalize_unreachable(&out, mode);
            prop_assert_eq!(again, out);
            prop_assert!(more.is_empty());
        }
    }
}

fn closing(e: &Term, pool: &ValuePool, r: &mut ChaCha8Rng) -> Substitution {
    free_vars(e).into_iter().map(|x| (x, pool.sample(r))).collect()
}

fn is_value_like(o: &Observation) -> bool {
    matches!(o, Observation::Value(_) | Observation::Function)
}

#[test]
fn syntactic_safety_is_sound() {
    let mut r = rng(21);
    let gen = TermGen::open(4, &["a", "b"]);
    let pool = ValuePool::mixed();
    let mut found = 0;
    while found < 1_000 {
        let e = random_term(&mut r, &gen);
        if !is_safe(SafetyMode::Syntactic, &e) {
            continue;
        }
        found += 1;
        for _ in 0..20 {
            let closed = apply_substitution(&e, &closing(&e, &pool, &mut r));
            let o = eval(&closed, 10_000).unwrap();
            assert!(is_value_like(&o), "{e} gave {o} after closing as {closed}");
        }
    }
}

#[test]
fn integer_safety_is_sound_over_integers() {
    let mut r = rng(22);
    let gen = TermGen::open(4, &["a", "b"]);
    let pool = ValuePool::integers();
    let mut found = 0;
    while found < 1_000 {
        let e = random_term(&mut r, &gen);
        if !is_safe(SafetyMode::Integer, &e) || is_safe(SafetyMode::Syntactic, &e) {
            continue;
        }
        found += 1;
        for _ in 0..20 {
            let closed = apply_substitution(&e, &closing(&e, &pool, &mut r));
            let o = eval(&closed, 10_000).unwrap();
            assert!(is_value_like(&o), "{e} gave {o} after closing as {closed}");
        }
    }
}

fn instructions(f: &VFunction) -> usize {
    f.blocks.iter().map(|b| b.phis.len() + b.commands.len() + 1).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn vminus_text_roundtrip(f in vfunction()) {
        let back = parse_vminus(&print_vminus(&f)).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn simplification_is_sound_idempotent_and_shrinking(f in vfunction(), seed in any::<u64>()) {
        prop_assert!(validate(&f).is_ok());
        let (g, _) = simplify_function_cfg(&f).unwrap();
        prop_assert!(validate(&g).is_ok());
        prop_assert!(g.blocks.len() <= f.blocks.len());
        prop_assert!(instructions(&g) <= instructions(&f));
        let (h, trace) = simplify_function_cfg(&g).unwrap();
        prop_assert_eq!(&h, &g);
        prop_assert!(trace.is_empty());
        for args in sample_inputs(f.params.len(), 10, seed) {
            let before = eval_vminus(&f, &args, 10_000).unwrap();
            if matches!(before, VOutcome::HitUnreachable | VOutcome::OutOfFuel) {
                continue;
            }
            prop_assert_eq!(eval_vminus(&g, &args, 10_000).unwrap(), before);
        }
    }

    #[test]
    fn translation_is_closed_and_commutes(f in vfunction(), seed in any::<u64>()) {
        let t = kh_proc(&f).unwrap();
        prop_assert!(is_closed(&t));
        for args in sample_inputs(f.params.len(), 6, seed) {
            let v = eval_vminus(&f, &args, 10_000).unwrap();
            let o = eval(&apply_translation(&t, &args), 200_000).unwrap();
            match (&v, &o) {
                (VOutcome::OutOfFuel, _) | (_, Observation::Timeout(_)) => {}
                (VOutcome::Returned(a), Observation::Value(b)) => prop_assert_eq!(a, b),
                (VOutcome::Errored, Observation::ErrK(_)) => {}
                (VOutcome::HitUnreachable, Observation::UndefHit) => {}
                _ => prop_assert!(false, "{} vs {} on {:?} for\n{}", v, o, args, f),
            }
        }
    }
}
