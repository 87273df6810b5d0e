use gymkit::conformance::check_space_algebra;
use gymkit::seeding::Rng;
use gymkit::spaces::{flatdim, BoxSpace, DType, Discrete, GraphSpace, MultiDiscrete, Space};
use proptest::prelude::*;

fn one_of_each_kind() -> Vec<Space> {
    let unit = Space::real_box(0.0, 1.0, vec![2]).unwrap();
    vec![
        Space::Box(
            BoxSpace::new(
                vec![-1.0, f64::NEG_INFINITY, 0.0],
                vec![1.0, 0.0, f64::INFINITY],
                vec![3],
                DType::Float64,
            )
            .unwrap(),
        ),
        Space::Discrete(Discrete::new(5, -2).unwrap()),
        Space::MultiDiscrete(MultiDiscrete::with_start(vec![2, 3], vec![0, 10]).unwrap()),
        Space::multi_binary(4).unwrap(),
        Space::text(1, 6).unwrap(),
        Space::product(vec![Space::discrete(2).unwrap(), unit.clone()]).unwrap(),
        Space::mapping(vec![
            ("a", Space::discrete(3).unwrap()),
            ("b", unit.clone()),
        ])
        .unwrap(),
        Space::sequence(Space::discrete(4).unwrap()),
        Space::graph(unit.clone(), Some(Space::discrete(3).unwrap())).unwrap(),
        Space::one_of(vec![Space::discrete(3).unwrap(), unit]).unwrap(),
    ]
}

#[test]
fn every_kind_passes_with_a_thousand_samples() {
    let spaces = one_of_each_kind();
    let kinds: std::collections::BTreeSet<&str> = spaces.iter().map(Space::kind).collect();
    assert_eq!(kinds.len(), 10);
    let mut rng = Rng::from_seed(2024);
    for space in &spaces {
        check_space_algebra(space, 1000, 7, &mut rng).unwrap();
    }
}

#[test]
fn flatdim_is_additive() {
    let a = Space::discrete(3).unwrap();
    let b = Space::real_box(-1.0, 1.0, vec![2, 2]).unwrap();
    let c = Space::multi_binary(5).unwrap();
    let (da, db, dc) = (
        flatdim(&a).unwrap(),
        flatdim(&b).unwrap(),
        flatdim(&c).unwrap(),
    );
    assert_eq!((da, db, dc), (3, 4, 5));
    let product = Space::product(vec![a.clone(), b.clone(), c.clone()]).unwrap();
    assert_eq!(flatdim(&product).unwrap(), da + db + dc);
    let mapping = Space::mapping(vec![("x", a.clone()), ("y", b.clone())]).unwrap();
    assert_eq!(flatdim(&mapping).unwrap(), da + db);
    let one_of = Space::one_of(vec![a, b]).unwrap();
    assert_eq!(flatdim(&one_of).unwrap(), 1 + da + db);
}

fn leaf() -> impl Strategy<Value = Space> {
    let bound = prop_oneof![Just(f64::NEG_INFINITY), Just(f64::INFINITY), -10.0..10.0f64,];
    let real_box = (
        1usize..4,
        1usize..3,
        proptest::collection::vec((bound.clone(), bound), 12),
    )
        .prop_filter_map("valid bounds", |(rows, cols, pairs)| {
            let n = rows * cols;
            let (low, high): (Vec<f64>, Vec<f64>) = pairs
                .into_iter()
                .take(n)
                .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
                .unzip();
            BoxSpace::new(low, high, vec![rows, cols], DType::Float64)
                .ok()
                .map(Space::Box)
        });
    let int_box = (-5i64..5, 0i64..6, 1usize..4).prop_map(|(lo, span, n)| {
        Space::Box(BoxSpace::uniform(lo as f64, (lo + span) as f64, vec![n], DType::Int64).unwrap())
    });
    prop_oneof![
        real_box,
        int_box,
        (1u64..10, -5i64..5).prop_map(|(n, s)| Space::Discrete(Discrete::new(n, s).unwrap())),
        proptest::collection::vec(1u64..5, 1..4).prop_map(|v| Space::multi_discrete(v).unwrap()),
        (1usize..6).prop_map(|n| Space::multi_binary(n).unwrap()),
        (0usize..3, 0usize..5).prop_map(|(lo, extra)| Space::text(lo, lo + extra).unwrap()),
    ]
}

fn any_space() -> impl Strategy<Value = Space> {
    leaf().prop_recursive(3, 24, 3, |inner| {
        let node = prop_oneof![
            (1u64..5).prop_map(|n| Space::discrete(n).unwrap()),
            (1usize..3).prop_map(|n| Space::real_box(-1.0, 1.0, vec![n]).unwrap()),
        ];
        prop_oneof![
            proptest::collection::vec(inner.clone(), 1..4).prop_map(|v| Space::product(v).unwrap()),
            proptest::collection::vec(inner.clone(), 1..4).prop_map(|v| {
                Space::mapping(
                    v.into_iter()
                        .enumerate()
                        .map(|(i, s)| (format!("k{i}"), s))
                        .collect(),
                )
                .unwrap()
            }),
            inner.clone().prop_map(Space::sequence),
            (node.clone(), proptest::option::of(node))
                .prop_map(|(n, e)| Space::Graph(GraphSpace::new(n, e).unwrap())),
            proptest::collection::vec(inner, 1..4).prop_map(|v| Space::one_of(v).unwrap()),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn algebra_holds_for_generated_spaces(space in any_space(), seed in any::<u64>(), batch in 1usize..6) {
        let mut rng = Rng::from_seed(seed);
        if let Err(e) = check_space_algebra(&space, 20, batch, &mut rng) {
            return Err(TestCaseError::fail(e));
        }
    }

    #[test]
    fn json_round_trip(space in any_space()) {
        let text = space.to_json_string();
        let back = Space::from_json_str(&text).unwrap();
        prop_assert_eq!(back, space);
    }
}

#[test]
fn equal_seeds_sample_equally() {
    for space in one_of_each_kind() {
        let (mut a, mut b) = (Rng::from_seed(77), Rng::from_seed(77));
        for _ in 0..100 {
            assert!(
                space.sample(&mut a).bit_eq(&space.sample(&mut b)),
                "{space}"
            );
        }
    }
}
