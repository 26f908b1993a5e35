//! Randomized cross-cutting properties.
//!
//! These tie the independent pieces of the crate to each other: the pure
//! normalizer against pure evaluation, the term generator against the type
//! checker, decorations against observable effects in the finite models, the
//! three denotations against one another, the interpreter against its own
//! determinism and fuel discipline, and oracle verdicts against the strength
//! order on equation kinds.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use decorat_core::harness::{random_purefn, random_term};
use decorat_core::imp::{self, Cmd, Outcome, Store};
use decorat_core::lemmas;
use decorat_core::oracle::{
    denote_combined, denote_exception, denote_state, semantic_eq, Den, FiniteModel, Flow, World,
};
use decorat_core::rules::sample_value;
use decorat_core::script::run_script;
use decorat_core::translate::d_cmd;
use decorat_core::{Decoration, EqKind, ObjType, Term, Value};

const FUEL: u64 = 96;

/// Interface types the generators are exercised over.
fn type_pool() -> Vec<ObjType> {
    vec![
        ObjType::Unit,
        ObjType::Int,
        ObjType::Bool,
        ObjType::prod(ObjType::Int, ObjType::Int),
        ObjType::sum(ObjType::Unit, ObjType::Unit),
        ObjType::prod(ObjType::Bool, ObjType::Unit),
    ]
}

fn world_pool() -> [World; 3] {
    [World::State, World::Exception, World::Combined]
}

/// Locations assigned anywhere in a command, caught or not.
fn assigned_locations(c: &Cmd, out: &mut BTreeSet<decorat_core::LocId>) {
    match c {
        Cmd::Skip | Cmd::Throw(_) => {}
        Cmd::Assign(x, _) => {
            out.insert(x.clone());
        }
        Cmd::Seq(a, b) | Cmd::TryCatch(a, _, b) => {
            assigned_locations(a, out);
            assigned_locations(b, out);
        }
        Cmd::If(_, a, b) => {
            assigned_locations(a, out);
            assigned_locations(b, out);
        }
        Cmd::While(_, a) => assigned_locations(a, out),
    }
}

fn corpus_program(idx: usize) -> decorat_core::imp::Program {
    let (name, _) = lemmas::CORPUS[idx % lemmas::CORPUS.len()];
    lemmas::corpus_program(name)
        .expect("bundled name")
        .expect("bundled corpus parses")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// `normalize` is idempotent, keeps the interface, and agrees with the
    /// original on every sampled input.
    #[test]
    fn normalization_preserves_meaning(
        seed in any::<u64>(),
        di in 0usize..6,
        ci in 0usize..6,
        size in 0u32..5,
    ) {
        let model = FiniteModel::small();
        let pool = type_pool();
        let (dom, cod) = (&pool[di], &pool[ci]);
        let Some(f) = random_purefn(&model, seed, dom, cod, size) else { return Ok(()) };
        let n = f.normalize();
        prop_assert_eq!(&n.normalize(), &n, "normalize is not idempotent on {}", f);
        prop_assert!(model.env.types_eq(&f.dom(), &n.dom()), "{} changed domain", f);
        prop_assert!(model.env.types_eq(&f.cod(), &n.cod()), "{} changed codomain", f);
        let resolved = model.env.resolve(&f.dom());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
        for _ in 0..12 {
            let Some(v) = sample_value(&resolved, &mut rng) else { break };
            match (f.eval(&v), n.eval(&v)) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b, "{} and {} split on {}", f, n, v),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "evaluability changed: {:?} vs {:?}", a, b),
            }
        }
    }

    /// Generated terms really have the interface and decoration bound they
    /// were asked for.
    #[test]
    fn generated_terms_satisfy_their_contract(
        seed in any::<u64>(),
        di in 0usize..6,
        ci in 0usize..6,
        wi in 0usize..3,
        bs in 0u8..3,
        be in 0u8..3,
    ) {
        let model = FiniteModel::small();
        let pool = type_pool();
        let (dom, cod) = (&pool[di], &pool[ci]);
        let world = world_pool()[wi];
        let bound = Decoration::new(bs, be);
        let Some(t) = random_term(&model, world, seed, dom, cod, bound, 4) else {
            return Ok(());
        };
        let (d, c) = t.typecheck(&model.env).expect("generated term typechecks");
        prop_assert!(model.env.types_eq(&d, dom), "domain {} is not {}", d, dom);
        prop_assert!(model.env.types_eq(&c, cod), "codomain {} is not {}", c, cod);
        let dec = t.decoration();
        prop_assert!(
            dec.state <= bound.state && dec.exc <= bound.exc,
            "decoration {} exceeds requested bound {}",
            dec,
            bound
        );
    }

    /// Embedding a pure function as a term means exactly applying it: no
    /// store change, no exception, same outputs pointwise.
    #[test]
    fn pure_terms_apply_their_function(
        seed in any::<u64>(),
        di in 0usize..6,
        ci in 0usize..6,
        size in 0u32..5,
        store_idx in 0usize..4,
    ) {
        let model = FiniteModel::small();
        let pool = type_pool();
        let (dom, cod) = (&pool[di], &pool[ci]);
        let Some(f) = random_purefn(&model, seed, dom, cod, size) else { return Ok(()) };
        let t = Term::pure(f.clone());
        prop_assert_eq!(t.decoration(), Decoration::PURE);
        let stores = model.sampled_stores(4, seed);
        let s = stores[store_idx % stores.len()].clone();
        let resolved = model.env.resolve(&f.dom());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5A5A);
        for _ in 0..8 {
            let Some(v) = sample_value(&resolved, &mut rng) else { break };
            let Ok(want) = f.eval(&v) else { continue };
            let got = denote_combined(&t, &model.env, Flow::Ord(v.clone()), s.clone(), FUEL)
                .expect("pure term denotes");
            prop_assert_eq!(got, Den::Val((Flow::Ord(want), s.clone())));
        }
    }

    /// State degree at most 1 means the final store is the initial store,
    /// whatever else the term does.
    #[test]
    fn accessors_leave_the_store_alone(
        seed in any::<u64>(),
        di in 0usize..6,
        ci in 0usize..6,
        store_idx in 0usize..4,
    ) {
        let model = FiniteModel::small();
        let pool = type_pool();
        let (dom, cod) = (&pool[di], &pool[ci]);
        let bound = Decoration::new(1, 2);
        let Some(t) = random_term(&model, World::Combined, seed, dom, cod, bound, 4) else {
            return Ok(());
        };
        let stores = model.sampled_stores(4, seed);
        let s = stores[store_idx % stores.len()].clone();
        let resolved = model.env.resolve(dom);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x11);
        for _ in 0..8 {
            let Some(v) = sample_value(&resolved, &mut rng) else { break };
            let out = denote_combined(&t, &model.env, Flow::Ord(v), s.clone(), FUEL)
                .expect("generated term denotes");
            if let Den::Val((_, s2)) = out {
                prop_assert_eq!(s2, s.clone(), "accessor {} moved the store", t);
            }
        }
    }

    /// Exception degree at most 1 means exceptional inputs pass through
    /// untouched: same exception out, same store, no work done.
    #[test]
    fn propagators_fix_exceptional_inputs(
        seed in any::<u64>(),
        di in 0usize..6,
        ci in 0usize..6,
        store_idx in 0usize..4,
        exc_idx in 0usize..2,
    ) {
        let model = FiniteModel::small();
        let pool = type_pool();
        let (dom, cod) = (&pool[di], &pool[ci]);
        let bound = Decoration::new(2, 1);
        let Some(t) = random_term(&model, World::Combined, seed, dom, cod, bound, 4) else {
            return Ok(());
        };
        let stores = model.sampled_stores(4, seed);
        let s = stores[store_idx % stores.len()].clone();
        let e = model.env.exceptions[exc_idx % model.env.exceptions.len()].clone();
        let out = denote_combined(&t, &model.env, Flow::Exc(e.clone()), s.clone(), FUEL)
            .expect("generated term denotes");
        prop_assert_eq!(out, Den::Val((Flow::Exc(e), s)), "propagator {} acted on an exception", t);
    }

    /// The state-only denotation agrees with the combined one on terms that
    /// never touch exceptions.
    #[test]
    fn state_denotation_agrees_with_combined(
        seed in any::<u64>(),
        di in 0usize..6,
        ci in 0usize..6,
        store_idx in 0usize..4,
    ) {
        let model = FiniteModel::small();
        let pool = type_pool();
        let (dom, cod) = (&pool[di], &pool[ci]);
        let bound = Decoration::new(2, 0);
        let Some(t) = random_term(&model, World::State, seed, dom, cod, bound, 4) else {
            return Ok(());
        };
        let stores = model.sampled_stores(4, seed);
        let s = stores[store_idx % stores.len()].clone();
        let resolved = model.env.resolve(dom);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x22);
        for _ in 0..8 {
            let Some(v) = sample_value(&resolved, &mut rng) else { break };
            let st = denote_state(&t, &model.env, v.clone(), s.clone(), FUEL)
                .expect("state denotation");
            let cb = denote_combined(&t, &model.env, Flow::Ord(v), s.clone(), FUEL)
                .expect("combined denotation");
            match (st, cb) {
                (Den::Val((v1, s1)), Den::Val((Flow::Ord(v2), s2))) => {
                    prop_assert_eq!(v1, v2);
                    prop_assert_eq!(s1, s2);
                }
                (Den::Divergent, Den::Divergent) => {}
                (a, b) => prop_assert!(false, "worlds disagree on {}: {:?} vs {:?}", t, a, b),
            }
        }
    }

    /// The exception-only denotation agrees with the combined one on terms
    /// that never touch the store, and such terms leave every store fixed.
    #[test]
    fn exception_denotation_agrees_with_combined(
        seed in any::<u64>(),
        di in 0usize..6,
        ci in 0usize..6,
        store_idx in 0usize..4,
        exceptional in any::<bool>(),
    ) {
        let model = FiniteModel::small();
        let pool = type_pool();
        let (dom, cod) = (&pool[di], &pool[ci]);
        let bound = Decoration::new(0, 2);
        let Some(t) = random_term(&model, World::Exception, seed, dom, cod, bound, 4) else {
            return Ok(());
        };
        let stores = model.sampled_stores(4, seed);
        let s = stores[store_idx % stores.len()].clone();
        let resolved = model.env.resolve(dom);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x33);
        let input = if exceptional {
            Flow::Exc(model.env.exceptions[0].clone())
        } else {
            match sample_value(&resolved, &mut rng) {
                Some(v) => Flow::Ord(v),
                None => return Ok(()),
            }
        };
        let ex = denote_exception(&t, &model.env, input.clone(), FUEL)
            .expect("exception denotation");
        let cb = denote_combined(&t, &model.env, input, s.clone(), FUEL)
            .expect("combined denotation");
        match (ex, cb) {
            (Den::Val(f1), Den::Val((f2, s2))) => {
                prop_assert_eq!(f1, f2);
                prop_assert_eq!(s2, s, "state-pure term {} moved the store", t);
            }
            (Den::Divergent, Den::Divergent) => {}
            (a, b) => prop_assert!(false, "worlds disagree on {}: {:?} vs {:?}", t, a, b),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Running a program twice from the same store gives the same outcome.
    #[test]
    fn interpreter_is_deterministic(
        idx in 0usize..64,
        seed in any::<u64>(),
        store_idx in 0usize..3,
        fuel in 0u64..60,
    ) {
        let prog = corpus_program(idx);
        let model = FiniteModel::for_env(prog.env.clone());
        let stores = model.sampled_stores(3, seed);
        let s = stores[store_idx % stores.len()].clone();
        let a = imp::run(&prog.cmd, s.clone(), fuel);
        let b = imp::run(&prog.cmd, s, fuel);
        prop_assert_eq!(a, b);
    }

    /// A run that terminates within its fuel keeps the same outcome under
    /// any larger fuel.
    #[test]
    fn interpreter_fuel_is_monotone(
        idx in 0usize..64,
        seed in any::<u64>(),
        store_idx in 0usize..3,
        fuel in 0u64..60,
        extra in 1u64..1000,
    ) {
        let prog = corpus_program(idx);
        let model = FiniteModel::for_env(prog.env.clone());
        let stores = model.sampled_stores(3, seed);
        let s = stores[store_idx % stores.len()].clone();
        let first = imp::run(&prog.cmd, s.clone(), fuel);
        if matches!(first, Outcome::OutOfFuel(_)) {
            return Ok(());
        }
        let second = imp::run(&prog.cmd, s, fuel + extra);
        prop_assert_eq!(first, second);
    }

    /// Locations never assigned by the program keep their initial value, in
    /// ordinary, exceptional, and out-of-fuel outcomes alike.
    #[test]
    fn unassigned_locations_are_untouched(
        idx in 0usize..64,
        seed in any::<u64>(),
        store_idx in 0usize..3,
        fuel in 0u64..200,
    ) {
        let prog = corpus_program(idx);
        let model = FiniteModel::for_env(prog.env.clone());
        let stores = model.sampled_stores(3, seed);
        let s = stores[store_idx % stores.len()].clone();
        let mut written = BTreeSet::new();
        assigned_locations(&prog.cmd, &mut written);
        let out = match imp::run(&prog.cmd, s.clone(), fuel) {
            Outcome::Final(s1) | Outcome::Uncaught(_, s1) => s1,
            Outcome::OutOfFuel(cfg) => cfg.store,
        };
        for loc in &prog.env.locations {
            if !written.contains(loc) {
                prop_assert_eq!(
                    out.get(loc),
                    s.get(loc),
                    "location {} changed without an assignment",
                    loc
                );
            }
        }
    }

    /// A translated program that denotes a value at some fuel denotes the
    /// same value at any larger fuel.
    #[test]
    fn denotation_fuel_is_monotone(
        idx in 0usize..64,
        seed in any::<u64>(),
        store_idx in 0usize..3,
        extra in 1u64..500,
    ) {
        let prog = corpus_program(idx);
        let model = FiniteModel::for_env(prog.env.clone());
        let stores = model.sampled_stores(3, seed);
        let s = stores[store_idx % stores.len()].clone();
        let t = d_cmd(&prog.cmd);
        let low = denote_combined(&t, &prog.env, Flow::Ord(Value::U), s.clone(), 24)
            .expect("translation denotes");
        if let Den::Val(r) = low {
            let high = denote_combined(&t, &prog.env, Flow::Ord(Value::U), s, 24 + extra)
                .expect("translation denotes");
            prop_assert_eq!(high, Den::Val(r));
        }
    }

    /// Oracle verdicts respect the strength order: a strong agreement
    /// implies every weaker one.
    #[test]
    fn verdicts_respect_the_kind_order(
        seed in any::<u64>(),
        di in 0usize..6,
        ci in 0usize..6,
        same in any::<bool>(),
    ) {
        let model = FiniteModel::tiny();
        let pool = type_pool();
        let (dom, cod) = (&pool[di], &pool[ci]);
        let full = Decoration::new(2, 2);
        let Some(t1) = random_term(&model, World::Combined, seed, dom, cod, full, 3) else {
            return Ok(());
        };
        let t2 = if same {
            t1.clone()
        } else {
            match random_term(&model, World::Combined, seed ^ 0x77, dom, cod, full, 3) {
                Some(t) => t,
                None => return Ok(()),
            }
        };
        let check = |kind: EqKind| {
            semantic_eq(&t1, &t2, kind, &model, World::Combined, FUEL, seed)
                .expect("verdict")
                .holds
        };
        let ss = check(EqKind::SS);
        let ws = check(EqKind::WS);
        let sw = check(EqKind::SW);
        let ww = check(EqKind::WW);
        prop_assert!(!ss || (ws && sw), "strong-strong held but a weakening failed");
        prop_assert!(!ws || ww, "weak-state held but weak-weak failed");
        prop_assert!(!sw || ww, "weak-exception held but weak-weak failed");
        if same {
            prop_assert!(ss, "a term stopped agreeing with itself");
        }
    }
}

/// Replays of the bundled scripts are reproducible transcript for
/// transcript, not just verdict for verdict.
#[test]
fn script_replay_is_deterministic() {
    for (name, src) in lemmas::SCRIPTS {
        let a = run_script(src).expect("bundled script parses");
        let b = run_script(src).expect("bundled script parses");
        assert_eq!(a.all_accepted, b.all_accepted, "{name} verdict changed");
        let ta = serde_json::to_string(&a.lemmas.iter().map(|l| &l.transcript).collect::<Vec<_>>())
            .unwrap();
        let tb = serde_json::to_string(&b.lemmas.iter().map(|l| &l.transcript).collect::<Vec<_>>())
            .unwrap();
        assert_eq!(ta, tb, "{name} transcript changed between replays");
    }
}

/// Translated commands are always unit-interfaced and never catchers: the
/// only exception degree a surface program can exhibit is raising.
#[test]
fn translations_are_unit_commands_with_bounded_effects() {
    for (name, _) in lemmas::CORPUS {
        let prog = lemmas::corpus_program(name).unwrap().unwrap();
        let t = d_cmd(&prog.cmd);
        let (d, c) = t.typecheck(&prog.env).expect("translation typechecks");
        assert!(prog.env.types_eq(&d, &ObjType::Unit), "{name}: domain {d}");
        assert!(prog.env.types_eq(&c, &ObjType::Unit), "{name}: codomain {c}");
        let dec = t.decoration();
        assert!(dec.exc <= 1, "{name}: translation is a catcher ({dec})");
    }
}

/// Interpreting from explicitly built stores and from `Store::with` agree;
/// guards against the store abstraction drifting from plain maps.
#[test]
fn store_constructors_agree()  {
    let prog = corpus_program(6);
    let mut direct = Store::zeros(&prog.env);
    for (i, loc) in prog.env.locations.iter().enumerate() {
        direct.set(loc, BigInt::from(i as i64 + 1));
    }
    let built = Store::with(
        &prog.env,
        prog.env
            .locations
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), BigInt::from(i as i64 + 1))),
    )
    .unwrap();
    assert_eq!(direct, built);
    assert_eq!(
        imp::run(&prog.cmd, direct, 500),
        imp::run(&prog.cmd, built.clone(), 500)
    );
    let unknown = Store::with(&prog.env, [(decorat_core::LocId("nope".into()), BigInt::from(1))]);
    assert!(unknown.is_err());
}
