//! Property-based parse ∘ pretty_print roundtrip over generated models.
//!
//! The generator emits canonical ASTs only: spans are defaults (spans are
//! ignored by structural equality anyway), floats are positive finite
//! values, and unary negation is applied to references rather than
//! literals so `-3` never has two possible parses.

use proptest::collection::vec;
use proptest::option;
use proptest::prelude::*;

use stf::model::*;
use stf::{parse, pretty_print};

const KEYWORDS: &[&str] = &[
    "import", "thing", "fragment", "includes", "property", "message", "port", "receives",
    "sends", "data_analytics", "dataset", "features", "labels", "sequential", "window",
    "horizon", "scaling", "missing", "model", "automl", "metric", "folds", "budget",
    "pretrained", "statechart", "init", "state", "on_entry", "on_exit", "transition", "event",
    "guard", "configuration", "instance", "connector", "var", "print", "if", "else", "while",
    "da_save", "da_preprocess", "da_train", "da_predict", "true", "false",
];

fn sp() -> Span {
    Span::default()
}

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,5}".prop_filter("not a keyword", |s| !KEYWORDS.contains(&s.as_str()))
}

fn type_name() -> impl Strategy<Value = String> {
    "[A-Z][a-zA-Z0-9]{0,5}".prop_filter("not a type keyword", |s| {
        !matches!(s.as_str(), "Int" | "Float" | "Bool" | "String" | "Timestamp")
    })
}

fn scalar_type() -> impl Strategy<Value = ScalarType> {
    prop_oneof![
        Just(ScalarType::Int),
        Just(ScalarType::Float),
        Just(ScalarType::Bool),
        Just(ScalarType::String),
        Just(ScalarType::Timestamp),
    ]
}

fn literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        (-1000i64..1000).prop_map(Literal::Int),
        (1u32..1_000_000u32).prop_map(|n| Literal::Float(n as f64 / 128.0)),
        any::<bool>().prop_map(Literal::Bool),
        "[a-zA-Z0-9 _.:/-]{0,12}".prop_map(Literal::Str),
        Just(Literal::Str("quote \" slash \\ nl \n tab \t".into())),
    ]
}

/// Positive literals only: `-3` in expression position parses as a unary
/// negation, so negative literal nodes would not be canonical there.
fn expr_literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        (0i64..1000).prop_map(Literal::Int),
        (1u32..1_000_000u32).prop_map(|n| Literal::Float(n as f64 / 128.0)),
        any::<bool>().prop_map(Literal::Bool),
        "[a-zA-Z0-9 _.:/-]{0,12}".prop_map(Literal::Str),
    ]
}

fn binop() -> impl Strategy<Value = BinOp> {
    prop_oneof![
        Just(BinOp::Add),
        Just(BinOp::Sub),
        Just(BinOp::Mul),
        Just(BinOp::Div),
        Just(BinOp::Mod),
        Just(BinOp::Eq),
        Just(BinOp::Ne),
        Just(BinOp::Lt),
        Just(BinOp::Le),
        Just(BinOp::Gt),
        Just(BinOp::Ge),
        Just(BinOp::And),
        Just(BinOp::Or),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        expr_literal().prop_map(|value| Expr::Lit { value, span: sp() }),
        ident().prop_map(|name| Expr::Ref { name, span: sp() }),
    ];
    leaf.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            (binop(), inner.clone(), inner.clone()).prop_map(|(op, lhs, rhs)| Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                span: sp(),
            }),
            inner.prop_map(|e| Expr::Unary { op: UnOp::Not, operand: Box::new(e), span: sp() }),
            ident().prop_map(|name| Expr::Unary {
                op: UnOp::Neg,
                operand: Box::new(Expr::Ref { name, span: sp() }),
                span: sp(),
            }),
        ]
    })
}

fn da_kind() -> impl Strategy<Value = DaActionKind> {
    prop_oneof![
        Just(DaActionKind::Save),
        Just(DaActionKind::Preprocess),
        Just(DaActionKind::Train),
        Just(DaActionKind::Predict),
    ]
}

fn stmt() -> impl Strategy<Value = Stmt> {
    let leaf = prop_oneof![
        (ident(), expr()).prop_map(|(target, value)| Stmt::Assign { target, value, span: sp() }),
        (ident(), expr()).prop_map(|(name, init)| Stmt::LocalDecl { name, init, span: sp() }),
        (ident(), ident(), vec(expr(), 0..3)).prop_map(|(port, message, args)| Stmt::Send {
            port,
            message,
            args,
            span: sp(),
        }),
        expr().prop_map(|value| Stmt::Print { value, span: sp() }),
        da_kind().prop_map(|kind| Stmt::DaAction { kind, span: sp() }),
    ];
    leaf.prop_recursive(2, 12, 3, |inner| {
        prop_oneof![
            (expr(), vec(inner.clone(), 0..3), option::of(vec(inner.clone(), 0..3))).prop_map(
                |(cond, then_body, else_body)| Stmt::If { cond, then_body, else_body, span: sp() }
            ),
            (expr(), vec(inner, 0..3))
                .prop_map(|(cond, body)| Stmt::While { cond, body, span: sp() }),
        ]
    })
}

fn annotation() -> impl Strategy<Value = Annotation> {
    (
        prop_oneof![
            Just("platform".to_string()),
            Just("backend".to_string()),
            Just("dataset_format".to_string()),
            ident(),
        ],
        "[a-zA-Z0-9_./ -]{0,10}",
    )
        .prop_map(|(key, value)| Annotation { key, value, span: sp() })
}

fn da_mode() -> impl Strategy<Value = DaMode> {
    let hyper = prop_oneof![
        (-100i64..100).prop_map(Literal::Int),
        (1u32..10_000u32).prop_map(|n| Literal::Float(n as f64 / 64.0)),
    ];
    prop_oneof![
        (ident(), vec((ident(), hyper), 0..3))
            .prop_map(|(algorithm, hyperparams)| DaMode::Expert { algorithm, hyperparams }),
        (ident(), 2u32..10, option::of(1u32..50))
            .prop_map(|(metric, folds, budget)| DaMode::AutoMl { metric, folds, budget }),
    ]
}

fn da_spec() -> impl Strategy<Value = DataAnalyticsSpec> {
    (
        (
            "[a-z]{1,8}\\.csv",
            vec(ident(), 1..4),
            vec(ident(), 1..3),
            option::of(any::<bool>()),
            option::of((1u32..50, 1u32..10)),
            option::of(prop_oneof![
                Just(ScalingKind::None),
                Just(ScalingKind::Minmax),
                Just(ScalingKind::Zscore)
            ]),
            option::of(prop_oneof![Just(MissingKind::Drop), Just(MissingKind::MeanImpute)]),
        ),
        (da_mode(), option::of("[a-z]{1,8}\\.json"), vec(annotation(), 0..2)),
    )
        .prop_map(
            |(
                (dataset, features, labels, sequential, window, scaling, missing),
                (mode, pretrained, annotations),
            )| DataAnalyticsSpec {
                dataset,
                features,
                labels,
                sequential,
                window,
                scaling,
                missing,
                mode,
                pretrained,
                annotations,
                span: sp(),
            },
        )
}

fn transition() -> impl Strategy<Value = Transition> {
    (
        type_name(),
        option::of((ident(), ident())),
        option::of(expr()),
        vec(stmt(), 0..4),
    )
        .prop_map(|(target, event, guard, actions)| Transition {
            target,
            event,
            guard,
            actions,
            span: sp(),
        })
}

fn state() -> impl Strategy<Value = State> {
    (type_name(), vec(stmt(), 0..3), vec(stmt(), 0..3), vec(transition(), 0..3)).prop_map(
        |(name, on_entry, on_exit, transitions)| State {
            name,
            on_entry,
            on_exit,
            transitions,
            span: sp(),
        },
    )
}

fn statechart() -> impl Strategy<Value = StateMachine> {
    (type_name(), vec(state(), 1..4)).prop_map(|(name, states)| {
        let initial = states[0].name.clone();
        StateMachine { name, initial, states, span: sp() }
    })
}

fn thing() -> impl Strategy<Value = Thing> {
    (
        (
            type_name(),
            any::<bool>(),
            vec(type_name(), 0..3),
            vec(annotation(), 0..3),
            vec(
                (ident(), scalar_type(), option::of(literal()))
                    .prop_map(|(name, ty, initial)| Property { name, ty, initial, span: sp() }),
                0..4,
            ),
        ),
        (
            vec(
                (
                    ident(),
                    vec(
                        (ident(), scalar_type())
                            .prop_map(|(name, ty)| Param { name, ty, span: sp() }),
                        0..3,
                    ),
                )
                    .prop_map(|(name, params)| Message { name, params, span: sp() }),
                0..4,
            ),
            vec(
                (ident(), vec(ident(), 0..3), vec(ident(), 0..3)).prop_map(
                    |(name, receives, sends)| Port { name, receives, sends, span: sp() },
                ),
                0..3,
            ),
            option::of(da_spec()),
            option::of(statechart()),
        ),
    )
        .prop_map(
            |(
                (name, is_fragment, includes, annotations, properties),
                (messages, ports, da, behavior),
            )| Thing {
                name,
                is_fragment,
                includes,
                annotations,
                properties,
                messages,
                ports,
                da,
                behavior,
                span: sp(),
            },
        )
}

fn configuration() -> impl Strategy<Value = Configuration> {
    (
        type_name(),
        vec(
            (ident(), type_name()).prop_map(|(name, thing)| Instance { name, thing, span: sp() }),
            0..4,
        ),
        vec(
            (ident(), ident(), ident(), ident()).prop_map(|(ai, ap, bi, bp)| Connector {
                a_instance: ai,
                a_port: ap,
                b_instance: bi,
                b_port: bp,
                span: sp(),
            }),
            0..3,
        ),
    )
        .prop_map(|(name, instances, connectors)| Configuration {
            name,
            instances,
            connectors,
            span: sp(),
        })
}

fn model() -> impl Strategy<Value = Model> {
    (
        vec("[a-z]{1,8}\\.stf".prop_map(|path| Import { path, span: sp() }), 0..3),
        vec(thing(), 0..3),
        vec(configuration(), 0..3),
    )
        .prop_map(|(imports, things, configurations)| Model { imports, things, configurations })
}

proptest! {
    // The roundtrip contract is exercised on 512 generated models.
    #![proptest_config(ProptestConfig { cases: 512, ..ProptestConfig::default() })]

    #[test]
    fn parse_pretty_print_roundtrip(m in model()) {
        let printed = pretty_print(&m);
        let (reparsed, diags) = parse(&printed);
        prop_assert!(diags.is_empty(), "canonical text failed to reparse:\n{printed}\n{diags:?}");
        prop_assert_eq!(&m, &reparsed.unwrap(), "roundtrip mismatch for:\n{}", printed);
    }

    #[test]
    fn pretty_print_is_idempotent(m in model()) {
        let once = pretty_print(&m);
        let (reparsed, _) = parse(&once);
        let twice = pretty_print(&reparsed.unwrap());
        prop_assert_eq!(once, twice);
    }
}
