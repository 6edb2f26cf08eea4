use ndarray::{ArrayD, IxDyn};
use proptest::prelude::*;
use rtensor::dsl::{parse_expr, BinOp, Expr, Sub, UnOp};
use rtensor::{
    equal_all, ewise_binary, page_transpose, product, solve_left, BinaryOp, Entries, IndexHandle, Operand, Tensor,
};

// ---- printing and parsing

fn literal() -> impl Strategy<Value = f64> {
    prop_oneof![
        (0u32..1000).prop_map(f64::from),
        (0.0f64..1e6),
        Just(1e-300),
        Just(2.5e17),
    ]
}

fn sub() -> impl Strategy<Value = Sub> {
    prop_oneof![
        (prop::sample::select(vec!["i", "j", "k2", "lp"]), any::<bool>())
            .prop_map(|(n, c)| Sub::Index { name: n.into(), complement: c }),
        (1usize..9).prop_map(Sub::Pos),
        (1usize..5, 0usize..4).prop_map(|(a, d)| Sub::Range(a, a + d)),
        Just(Sub::All),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        literal().prop_map(Expr::Num),
        literal().prop_map(Expr::Imag),
        (prop::sample::select(vec!["a", "b", "Y", "x_1"]), prop::option::of(prop::collection::vec(sub(), 0..3)))
            .prop_map(|(n, subs)| Expr::Ref { name: n.into(), subs }),
    ];
    leaf.prop_recursive(4, 32, 3, |inner| {
        let binop = prop::sample::select(vec![
            BinOp::Product,
            BinOp::LeftDivide,
            BinOp::RightDivide,
            BinOp::Ewise(BinaryOp::Add),
            BinOp::Ewise(BinaryOp::Sub),
            BinOp::Ewise(BinaryOp::Mul),
            BinOp::Ewise(BinaryOp::Div),
            BinOp::Ewise(BinaryOp::LeftDiv),
            BinOp::Ewise(BinaryOp::Pow),
            BinOp::Ewise(BinaryOp::Eq),
            BinOp::Ewise(BinaryOp::Ne),
            BinOp::Ewise(BinaryOp::Lt),
            BinOp::Ewise(BinaryOp::Ge),
            BinOp::Ewise(BinaryOp::And),
            BinOp::Ewise(BinaryOp::Or),
        ]);
        let unop = prop::sample::select(vec![UnOp::Neg, UnOp::Plus, UnOp::Not, UnOp::CTranspose, UnOp::Transpose]);
        prop_oneof![
            (binop, inner.clone(), inner.clone())
                .prop_map(|(op, l, r)| Expr::Binary { op, lhs: Box::new(l), rhs: Box::new(r) }),
            (unop, inner.clone()).prop_map(|(op, e)| Expr::Unary { op, expr: Box::new(e) }),
            (prop::sample::select(vec!["log", "abs", "cat", "trace", "isequal"]), prop::collection::vec(inner.clone(), 0..3))
                .prop_map(|(n, args)| Expr::Call { name: n.into(), args }),
            prop::collection::vec(prop::collection::vec(inner, 1..3), 0..3).prop_map(Expr::Matrix),
        ]
    })
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(e in expr()) {
        let printed = e.to_string();
        let back = parse_expr(&printed).map_err(|err| TestCaseError::fail(format!("{printed}: {err}")))?;
        prop_assert_eq!(&back, &e);
        prop_assert_eq!(back.to_string(), printed);
    }
}

// ---- algebra

fn entries(shape: Vec<usize>, seed: Vec<i8>) -> Entries {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|k| f64::from(seed[k % seed.len()])).collect();
    Entries::real(ArrayD::from_shape_vec(IxDyn(&shape), data).unwrap())
}

fn close(a: &Tensor, b: &Tensor, tol: f64) -> bool {
    if a.indices().len() != b.indices().len() {
        return false;
    }
    let Ok(d) = ewise_binary(BinaryOp::Sub, Operand::Tensor(a), Operand::Tensor(b)) else {
        return false;
    };
    let scale = a.entries().values().iter().map(|z| z.norm()).fold(1.0f64, f64::max);
    d.degree() == a.degree() && d.entries().values().iter().all(|z| z.norm() <= tol * scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Chains over distinct index identities reassociate.
    #[test]
    fn products_reassociate(
        dims in prop::collection::vec(1usize..4, 4),
        mat in prop::collection::vec(1usize..4, 4),
        vals in prop::collection::vec(-4i8..5, 1..40),
    ) {
        let [i, j, k, l] = [(); 4].map(|_| IndexHandle::fresh());
        let a = Tensor::with_indices(entries(vec![mat[0], mat[1], dims[0], dims[1]], vals.clone()), &[i, j]).unwrap();
        let b = Tensor::with_indices(entries(vec![mat[1], mat[2], dims[1], dims[2]], vals.iter().rev().copied().collect()), &[!j, k]).unwrap();
        let c = Tensor::with_indices(entries(vec![mat[2], mat[3], dims[2], dims[3]], vals.iter().map(|v| v / 2 - 1).collect()), &[!k, l]).unwrap();
        let left = product(&product(&a, &b).unwrap(), &c).unwrap();
        let right = product(&a, &product(&b, &c).unwrap()).unwrap();
        // Integer data, so both orders are exact.
        prop_assert!(equal_all(&[Operand::Tensor(&left), Operand::Tensor(&right)]));
        prop_assert!(close(&left, &right, 0.0));
    }

    /// Entrywise sums are commutative under alignment by identity.
    #[test]
    fn aligned_sums_commute(
        dims in prop::collection::vec(1usize..4, 3),
        vals in prop::collection::vec(-9i8..10, 1..30),
        va in any::<bool>(),
    ) {
        let [i, j, k] = [(); 3].map(|_| IndexHandle::fresh().with_variant(va));
        let a = Tensor::with_indices(entries(vec![2, 1, dims[0], dims[1]], vals.clone()), &[i, j]).unwrap();
        let b = Tensor::with_indices(entries(vec![2, 1, dims[2], dims[0]], vals.iter().rev().copied().collect()), &[k, i]).unwrap();
        let ab = ewise_binary(BinaryOp::Add, Operand::Tensor(&a), Operand::Tensor(&b)).unwrap();
        let ba = ewise_binary(BinaryOp::Add, Operand::Tensor(&b), Operand::Tensor(&a)).unwrap();
        prop_assert_eq!(ab.degree(), 3);
        prop_assert!(equal_all(&[Operand::Tensor(&ab), Operand::Tensor(&ba)]));
    }

    /// Transposing twice restores entries and variants.
    #[test]
    fn transpose_is_an_involution(
        shape in prop::collection::vec(1usize..4, 4),
        vals in prop::collection::vec(-9i8..10, 1..30),
    ) {
        let idx = [IndexHandle::fresh(), !IndexHandle::fresh()];
        let t = Tensor::with_indices(entries(shape, vals), &idx).unwrap();
        let once = page_transpose(&t);
        prop_assert!(once.indices().iter().zip(&idx).all(|(a, b)| *a == !*b));
        let twice = page_transpose(&once);
        prop_assert_eq!(twice.indices(), t.indices());
        prop_assert_eq!(twice.entries().values(), t.entries().values());
    }

    /// `A(~p) \ B(p)` solves `A X = B` page by page. The denominator's indices
    /// are complemented, so its page index is written with the other variant.
    #[test]
    fn left_division_solves(
        n in 1usize..5,
        pages in 1usize..4,
        cols in 1usize..3,
        vals in prop::collection::vec(-3i8..4, 1..50),
    ) {
        let p = IndexHandle::fresh();
        let mut a = entries(vec![n, n, pages], vals.clone()).to_real().unwrap();
        for q in 0..pages {
            for d in 0..n {
                a[[d, d, q]] += 4.0 * n as f64;
            }
        }
        let a = Tensor::with_indices(Entries::real(a), &[!p]).unwrap();
        let b = Tensor::with_indices(entries(vec![n, cols, pages], vals.iter().rev().copied().collect()), &[p]).unwrap();
        let x = solve_left(&a, &b).unwrap();
        prop_assert_eq!(x.indices(), &[p]);
        let back = product(&a.complement_indices(), &x).unwrap();
        prop_assert!(close(&back, &b, 1e-12));
    }
}
