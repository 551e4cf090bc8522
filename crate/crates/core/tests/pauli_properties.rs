use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use proptest::prelude::*;

use hqc_core::matrix::CMatrix;
use hqc_core::pauli::{expectation, reduce, word_mul, Letter, PauliWord, Phase, Position};

fn letter() -> impl Strategy<Value = Option<Letter>> {
    prop_oneof![
        Just(None),
        Just(Some(Letter::X)),
        Just(Some(Letter::Y)),
        Just(Some(Letter::Z))
    ]
}

fn word(max_pos: u32) -> impl Strategy<Value = PauliWord> {
    (
        0u8..4,
        proptest::collection::vec(letter(), max_pos as usize),
    )
        .prop_map(|(k, ls)| {
            let letters: BTreeMap<Position, Letter> = ls
                .into_iter()
                .enumerate()
                .filter_map(|(i, l)| l.map(|l| (Position(i as u32 + 1), l)))
                .collect();
            PauliWord::from_letters(Phase::from_exponent(k), letters)
        })
}

fn positions(n: u32) -> Vec<Position> {
    (1..=n).map(Position).collect()
}

proptest! {
    #[test]
    fn group_laws(a in word(5), b in word(5), c in word(5)) {
        prop_assert_eq!(word_mul(&word_mul(&a, &b), &c), word_mul(&a, &word_mul(&b, &c)));
        prop_assert_eq!(word_mul(&a, &PauliWord::identity()), a.clone());
        prop_assert_eq!(word_mul(&PauliWord::identity(), &a), a.clone());
        prop_assert!(word_mul(&a, &a.inverse()).is_identity());
        prop_assert_eq!(word_mul(&a, &a.inverse()).phase(), Phase::PlusOne);
    }

    #[test]
    fn products_match_matrices(a in word(3), b in word(3)) {
        let ps = positions(3);
        let lhs = CMatrix::of_word(&word_mul(&a, &b), &ps);
        let rhs = &CMatrix::of_word(&a, &ps) * &CMatrix::of_word(&b, &ps);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn commutation_matches_matrices(a in word(3), b in word(3)) {
        let ps = positions(3);
        let (ma, mb) = (CMatrix::of_word(&a, &ps), CMatrix::of_word(&b, &ps));
        let commute = (&ma * &mb).max_abs_diff(&(&mb * &ma)) <= 1e-12;
        prop_assert_eq!(a.commutes_with(&b), commute);
    }

    #[test]
    fn text_round_trip(a in word(6)) {
        let back: PauliWord = a.to_string().parse().unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn reduction_support_is_symmetric_difference(a in word(5), b in word(5)) {
        let reference: BTreeSet<Position> = positions(5).into_iter().collect();
        let (ra, rb) = (reduce(&a, &reference).unwrap(), reduce(&b, &reference).unwrap());
        let rab = reduce(&word_mul(&a, &b), &reference).unwrap();
        let expected: BTreeSet<Position> = ra.x_support.symmetric_difference(&rb.x_support).copied().collect();
        prop_assert_eq!(rab.x_support, expected);
    }
}

/// Every Hermitian word over four reference positions: the expectation in
/// `|0000>` equals the matrix element.
#[test]
fn expectation_matches_matrix_exhaustively() {
    let ps = positions(4);
    let reference: BTreeSet<Position> = ps.iter().copied().collect();
    let mut zero = vec![Complex64::new(0.0, 0.0); 16];
    zero[0] = Complex64::new(1.0, 0.0);
    let choices = [None, Some(Letter::X), Some(Letter::Y), Some(Letter::Z)];
    for code in 0..256u32 {
        let letters: BTreeMap<Position, Letter> = (0..4)
            .filter_map(|i| choices[((code >> (2 * i)) & 3) as usize].map(|l| (ps[i as usize], l)))
            .collect();
        for phase in [Phase::PlusOne, Phase::MinusOne] {
            let w = PauliWord::from_letters(phase, letters.clone());
            let m = CMatrix::of_word(&w, &ps);
            let element = m[(0, 0)];
            assert!(element.im.abs() <= 1e-12);
            assert_eq!(
                expectation(&w, &reference).unwrap() as f64,
                element.re,
                "{w}"
            );
        }
    }
}
