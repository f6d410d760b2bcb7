use std::fs;
use std::path::PathBuf;

use proptest::prelude::*;
use stable_conley_harness::problem::{
    BudgetSection, ComponentSection, DiagonalRule, FrameSection, LinearSection, MonomialSection, NeighborhoodSection,
    NonlinearitySection, OperatorSection, SubspacesSection, TailSection,
};
use stable_conley_harness::{parse_problem, ProblemError, ProblemSpec};

fn corpus() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems");
    let mut files: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
}

#[test]
fn corpus_round_trips() {
    let files = corpus();
    assert!(files.len() >= 5);
    for path in files {
        let spec = parse_problem(&fs::read_to_string(&path).unwrap()).unwrap();
        let again = parse_problem(&spec.to_toml()).unwrap();
        assert_eq!(spec, again, "{}", path.display());
        spec.build().unwrap();
    }
}

#[test]
fn minimal_linear_file_has_no_compact_part() {
    let text = "[operator]\ncore = [1.0, -2.0]\ntail = { constant = 1.0 }\ngap = 1.0\n\n\
                [neighborhood]\nball = 1.0\n\n[subspaces]\nladder = [2]\n\n[budgets]\nc1 = 0.1\nc2 = 0.1\n";
    let spec = parse_problem(text).unwrap();
    assert!(spec.nonlinearity.is_none());
    let p = spec.build().unwrap();
    assert!(p.field.map().is_zero());
    assert_eq!(p.frames.len(), 1);
}

#[test]
fn wrong_tail_sign_names_the_invariant() {
    let text = "[operator]\ncore = [1.0]\ntail = { positive = 1.0, negative = 1.0 }\ngap = 1.0\n\n\
                [neighborhood]\nball = 1.0\n\n[subspaces]\nladder = [1]\n\n[budgets]\nc1 = 0.1\nc2 = -0.1\n";
    match parse_problem(text) {
        Err(ProblemError::Invalid(v)) => {
            assert!(v
                .iter()
                .any(|x| x.section == "operator" && x.line == Some(1) && x.message.contains("tail negative")));
            assert!(v.iter().any(|x| x.section == "budgets" && x.line == Some(12)));
        }
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn syntax_errors_carry_a_location() {
    match parse_problem("[operator]\ncore = [1.0,\n") {
        Err(ProblemError::Parse(m)) => assert!(m.contains("line"), "{m}"),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn non_orthonormal_frames_are_reported() {
    let text = fs::read_to_string(corpus().into_iter().find(|p| p.ends_with("repeller.toml")).unwrap()).unwrap();
    let bad = text.replace("[0.0, 1.0, 0.0]]", "[0.0, 1.0, 0.5]]");
    match parse_problem(&bad) {
        Err(ProblemError::Invalid(v)) => {
            assert!(v.iter().any(|x| x.section == "subspaces.frames" && x.message.contains("rotated")), "{v:?}")
        }
        other => panic!("expected a validation error, got {other:?}"),
    }
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, any::<f64>().prop_filter("finite", |x| x.is_finite())]
}

fn spec() -> impl Strategy<Value = ProblemSpec> {
    let operator = (
        prop::collection::vec(finite(), 1..5),
        prop::option::of(prop::collection::vec(prop::collection::vec(finite(), 2), 2)),
        prop_oneof![
            (finite(), finite()).prop_map(|(positive, negative)| TailSection::Alternating { positive, negative }),
            finite().prop_map(|constant| TailSection::Constant { constant }),
        ],
        finite(),
        prop::option::of(finite()),
    )
        .prop_map(|(core, perturbation, tail, gap, tolerance)| OperatorSection {
            core,
            perturbation,
            tail,
            gap,
            tolerance,
        });
    let rule = prop_oneof![
        (finite(), finite()).prop_map(|(first, ratio)| DiagonalRule::Geometric { first, ratio }),
        (finite(), finite()).prop_map(|(scale, exponent)| DiagonalRule::Power { scale, exponent }),
        prop::collection::vec(finite(), 0..3).prop_map(|values| DiagonalRule::Explicit { values }),
    ];
    let nonlinearity = prop::option::of(
        (
            prop::collection::vec(0usize..6, 1..3),
            finite(),
            prop::collection::vec((0usize..6, finite(), prop::collection::vec(0u32..4, 2)), 0..3),
            prop::option::of(prop::collection::vec(rule, 0..3)),
        )
            .prop_map(|(support, cutoff, comps, diag)| NonlinearitySection {
                support,
                cutoff,
                components: comps
                    .into_iter()
                    .map(|(output, coefficient, exponents)| ComponentSection {
                        output,
                        monomials: vec![MonomialSection { coefficient, exponents }],
                    })
                    .collect(),
                linear: diag.map(|diagonal| LinearSection { core: None, diagonal }),
            }),
    );
    let frames = prop::collection::vec(
        (
            "[a-z]{1,6}",
            prop::collection::vec(0usize..8, 1..3),
            prop::collection::vec(prop::collection::vec(finite(), 2), 1..3),
        )
            .prop_map(|(name, support, columns)| FrameSection { name, support, columns }),
        0..3,
    );
    (
        operator,
        nonlinearity,
        prop_oneof![
            finite().prop_map(|r| NeighborhoodSection { ball: Some(r), cube: None }),
            finite().prop_map(|r| NeighborhoodSection { ball: None, cube: Some(r) }),
        ],
        prop::collection::vec(1usize..9, 0..4),
        frames,
        (finite(), finite(), prop::option::of(finite())),
        (8usize..64, 0usize..4, 0usize..3, any::<bool>(), finite(), finite()),
    )
        .prop_map(|(operator, nonlinearity, neighborhood, ladder, frames, (c1, c2, degeneracy), g)| {
            let mut spec: ProblemSpec = toml::from_str(
                "[operator]\ncore = [1.0]\ntail = { constant = 1.0 }\ngap = 1.0\n[neighborhood]\nball = 1.0\n\
                 [subspaces]\n[budgets]\nc1 = 1.0\nc2 = 1.0\n",
            )
            .unwrap();
            spec.operator = operator;
            spec.nonlinearity = nonlinearity;
            spec.neighborhood = neighborhood;
            spec.subspaces = SubspacesSection { ladder, frames };
            spec.budgets = BudgetSection { c1, c2, degeneracy };
            spec.grid.subdivisions = g.0;
            spec.grid.margin = g.1;
            spec.grid.max_refinements = g.2;
            spec.grid.split_products = g.3;
            spec.flow.tau = g.4;
            spec.flow.tol = g.5;
            spec
        })
}

proptest! {
    #[test]
    fn serialization_is_lossless(s in spec()) {
        let text = s.to_toml();
        let back: ProblemSpec = toml::from_str(&text).unwrap();
        prop_assert_eq!(back, s);
    }
}
