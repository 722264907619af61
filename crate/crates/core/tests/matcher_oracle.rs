mod common;

use cobert::matcher::values::{attention_bundle, fuse, hop1, hop2, score, Encoded};
use cobert::matcher::{AblationConfig, Pooling};
use cobert::numerics::{Mask, Matrix};
use proptest::prelude::*;

fn seq_strategy(max_len: usize, d: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<bool>)> {
    (1..=max_len).prop_flat_map(move |len| {
        (
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, d), len),
            prop::collection::vec(any::<bool>(), len),
            0..len,
        )
            .prop_map(|(rows, mut valid, keep)| {
                valid[keep] = true;
                (rows, valid)
            })
    })
}

fn lib(rows: &[Vec<f64>], valid: &[bool]) -> (Matrix<f64>, Mask) {
    (Matrix::from_rows(rows).unwrap(), Mask::from_flags(valid.to_vec()))
}

fn oracle(rows: &[Vec<f64>], valid: &[bool]) -> common::Seq {
    common::Seq { rows: rows.to_vec(), valid: valid.to_vec() }
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

const CONFIGS: [&str; 7] = ["full", "-hop1", "-hop2", "+hop3", "-max+mean", "+mean", "biencoder"];

type Rows = (Vec<Vec<f64>>, Vec<bool>);

fn triple() -> impl Strategy<Value = (Rows, Rows, Rows)> {
    (1usize..=4).prop_flat_map(|d| (seq_strategy(4, d), seq_strategy(4, d), seq_strategy(4, d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hop1_and_hop2_match_reference((a, b, _) in triple()) {
        let (xm, xk) = lib(&a.0, &a.1);
        let (ym, yk) = lib(&b.0, &b.1);
        let (x, y) = (Encoded::new(&xm, &xk), Encoded::new(&ym, &yk));
        let (ox, oy) = (oracle(&a.0, &a.1), oracle(&b.0, &b.1));
        for pooling in [Pooling::Max, Pooling::Mean, Pooling::MaxMean] {
            let (s, t, _) = hop1(x, y, pooling).unwrap();
            let (rs, rt) = common::hop1(&ox, &oy, pooling);
            prop_assert!(close(&s, &rs, 1e-5) && close(&t, &rt, 1e-5));
        }
        let bundle = attention_bundle(x, y).unwrap();
        let (s, t) = hop2(&bundle, x, y).unwrap();
        let (rs, rt) = common::hop2(&ox, &oy);
        prop_assert!(close(&s, &rs, 1e-5) && close(&t, &rt, 1e-5));
    }

    #[test]
    fn fuse_and_score_match_reference((c, p, r) in triple(), with_persona in any::<bool>()) {
        let (cm, ck) = lib(&c.0, &c.1);
        let (pm, pk) = lib(&p.0, &p.1);
        let (rm, rk) = lib(&r.0, &r.1);
        let po = oracle(&p.0, &p.1);
        for name in CONFIGS {
            let cfg = AblationConfig::preset(name).unwrap();
            let persona = with_persona.then(|| Encoded::new(&pm, &pk));
            let f = fuse(Encoded::new(&cm, &ck), persona, Encoded::new(&rm, &rk), &cfg).unwrap();
            let (xf, yf) = common::fuse(&oracle(&c.0, &c.1), with_persona.then_some(&po), &oracle(&r.0, &r.1), &cfg);
            prop_assert!(close(&f.context, &xf, 1e-5), "{}", name);
            prop_assert!(close(&f.response, &yf, 1e-5), "{}", name);
            prop_assert!((score(&f.context, &f.response) - common::score(&xf, &yf)).abs() <= 1e-5);
        }
    }
}

#[test]
fn single_token_cases() {
    let x = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
    let y = Matrix::from_rows(&[vec![-3.0, 0.5]]).unwrap();
    let m = Mask::all_valid(1);
    let (s, t, b) = hop1(Encoded::new(&x, &m), Encoded::new(&y, &m), Pooling::Max).unwrap();
    assert_eq!(s, vec![-3.0, 0.5]);
    assert_eq!(t, vec![1.0, 2.0]);
    assert_eq!(b.source_to_target.data(), &[1.0]);
    let b = attention_bundle(Encoded::new(&x, &m), Encoded::new(&y, &m)).unwrap();
    assert_eq!(b.source_weights.data(), &[1.0]);
    let (s2, t2) = hop2(&b, Encoded::new(&x, &m), Encoded::new(&y, &m)).unwrap();
    assert_eq!((s2, t2), (vec![1.0, 2.0], vec![-3.0, 0.5]));
}

#[test]
fn identical_target_rows_give_that_row() {
    let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.3, -2.0], vec![5.0, 1.0]]).unwrap();
    let y = Matrix::from_rows(&[vec![0.7, -0.2], vec![0.7, -0.2]]).unwrap();
    let (mx, my) = (Mask::all_valid(3), Mask::all_valid(2));
    let (s, _, _) = hop1(Encoded::new(&x, &mx), Encoded::new(&y, &my), Pooling::Max).unwrap();
    assert!(close(&s, &[0.7, -0.2], 1e-12));
}

#[test]
fn uniform_attention_gives_mean_source() {
    // Orthogonal source and target make every affinity zero, so both attentions are uniform.
    let x = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0], vec![9.0, 0.0, 0.0]]).unwrap();
    let y = Matrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 4.0]]).unwrap();
    let mx = Mask::from_flags(vec![true, true, false]);
    let my = Mask::all_valid(2);
    let b = attention_bundle(Encoded::new(&x, &mx), Encoded::new(&y, &my)).unwrap();
    let (s, t) = hop2(&b, Encoded::new(&x, &mx), Encoded::new(&y, &my)).unwrap();
    assert!(close(&s, &[1.5, 0.0, 0.0], 1e-12));
    assert!(close(&t, &[0.0, 0.5, 2.0], 1e-12));
}

#[test]
fn feature_layout_and_empty_persona() {
    let c = Matrix::from_rows(&[vec![0.2, -0.4], vec![1.0, 0.3]]).unwrap();
    let r = Matrix::from_rows(&[vec![0.5, 0.5]]).unwrap();
    let (mc, mr) = (Mask::all_valid(2), Mask::all_valid(1));
    let f = fuse(Encoded::new(&c, &mc), None, Encoded::new(&r, &mr), &AblationConfig::full()).unwrap();
    assert_eq!((f.context.len(), f.response.len()), (8, 8));
    assert!(f.context[4..].iter().chain(&f.response[4..]).all(|&v| v == 0.0));
    let no_hop2 = fuse(Encoded::new(&c, &mc), None, Encoded::new(&r, &mr), &AblationConfig::preset("-hop2").unwrap()).unwrap();
    assert_eq!(no_hop2.context[..2], f.context[..2]);
    assert_eq!(no_hop2.context.len(), 4);
    assert_eq!(score(&[0.0; 4], &[0.0; 4]), 0.0);
    assert_eq!(score(&[1.0, 0.0], &[1.0, 0.0]), 1.0);
}

#[test]
fn single_token_end_to_end_by_hand() {
    // One token each, no persona: hop-1 swaps the vectors and hop-2 returns them,
    // so X_f = [y, x, 0, 0], Y_f = [x, y, 0, 0] and the score is 2·x·y.
    let x = Matrix::from_rows(&[vec![0.3, -1.2, 0.5]]).unwrap();
    let y = Matrix::from_rows(&[vec![2.0, 0.1, -0.7]]).unwrap();
    let m = Mask::all_valid(1);
    let f = fuse(Encoded::new(&x, &m), None, Encoded::new(&y, &m), &AblationConfig::full()).unwrap();
    let xy: f64 = 0.3 * 2.0 + -1.2 * 0.1 + 0.5 * -0.7;
    assert!((f.score() - 2.0 * xy).abs() < 1e-12);
}

#[test]
fn biencoder_score_is_average_dot() {
    let c = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let p = Matrix::from_rows(&[vec![-1.0, 0.0]]).unwrap();
    let r = Matrix::from_rows(&[vec![0.5, 1.0], vec![1.5, -1.0]]).unwrap();
    let (m2, m1) = (Mask::all_valid(2), Mask::all_valid(1));
    let f = fuse(Encoded::new(&c, &m2), Some(Encoded::new(&p, &m1)), Encoded::new(&r, &m2), &AblationConfig::biencoder()).unwrap();
    // context mean (2, 3), persona (-1, 0) → (0.5, 1.5); response mean (1, 0).
    assert!((f.score() - 0.5f64).abs() < 1e-12);
}
