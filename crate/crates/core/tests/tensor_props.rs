//! Storage, unfolding and file-format invariants.

mod common;

use atd_core::tensor::{
    decode_atd, dematricize, encode_atd, matricize, parse_csv_slice, permuted_offsets, MatricizationSpec,
};
use atd_core::Tensor;
use common::{all_indices, offset};
use proptest::prelude::*;

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=4, 1..=4)
}

fn tensor_strategy() -> impl Strategy<Value = Tensor> {
    dims_strategy().prop_flat_map(|dims| {
        let n: usize = dims.iter().product();
        prop::collection::vec(-1e3f64..1e3, n).prop_map(move |v| Tensor::new(dims.clone(), v).unwrap())
    })
}

/// A random subset of `1..=order` in random order.
fn modes_strategy(order: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((1..=order).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_flat_map(move |p| (0..=order).prop_map(move |k| p[..k].to_vec()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn atd_round_trip_is_bit_exact(dims in dims_strategy(), bits in prop::collection::vec(any::<u64>(), 256)) {
        let n: usize = dims.iter().product();
        let data: Vec<f64> = bits[..n].iter().map(|&b| f64::from_bits(b)).collect();
        let t = Tensor::new(dims, data).unwrap();
        let back = decode_atd(&encode_atd(&t)).unwrap();
        prop_assert_eq!(back.dims(), t.dims());
        for (a, b) in back.data().iter().zip(t.data()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn truncated_atd_is_rejected(t in tensor_strategy(), cut in 1usize..16) {
        let bytes = encode_atd(&t);
        let keep = bytes.len().saturating_sub(cut);
        prop_assert!(decode_atd(&bytes[..keep]).is_err());
    }

    #[test]
    fn matricize_round_trip(
        (t, rows) in tensor_strategy().prop_flat_map(|t| {
            let d = t.order();
            (Just(t), modes_strategy(d))
        })
    ) {
        let spec = MatricizationSpec::new(t.order(), &rows).unwrap();
        let m = matricize(&t, &spec).unwrap();
        let (r, c) = spec.shape(t.dims());
        prop_assert_eq!((m.nrows(), m.ncols()), (r, c));
        prop_assert_eq!(dematricize(&m, &spec, t.dims()).unwrap(), t.clone());
        // the element at a 0-based index lands at the fastest-first row/col
        for idx in all_indices(t.dims()) {
            let mut ri = 0;
            let mut s = 1;
            for &md in spec.row_modes() {
                ri += idx[md - 1] * s;
                s *= t.dims()[md - 1];
            }
            let mut ci = 0;
            s = 1;
            for &md in spec.col_modes() {
                ci += idx[md - 1] * s;
                s *= t.dims()[md - 1];
            }
            prop_assert_eq!(m[(ri, ci)], t.data()[offset(t.dims(), &idx)]);
        }
    }

    #[test]
    fn permuted_offsets_is_a_permutation(
        (dims, order) in dims_strategy().prop_flat_map(|d| {
            let k = d.len();
            (Just(d), Just((1..=k).collect::<Vec<_>>()).prop_shuffle())
        })
    ) {
        let mut offs = permuted_offsets(&dims, &order).unwrap();
        offs.sort();
        let n: usize = dims.iter().product();
        prop_assert_eq!(offs, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn slice_then_set_slice_restores(
        (t, modes, picks) in tensor_strategy().prop_flat_map(|t| {
            let d = t.order();
            (Just(t), modes_strategy(d), prop::collection::vec(any::<prop::sample::Index>(), 4))
        })
    ) {
        let idx: Vec<usize> = modes.iter().zip(&picks).map(|(&m, p)| p.index(t.dims()[m - 1]) + 1).collect();
        let s = t.slice(&modes, &idx).unwrap();
        let mut blank = Tensor::zeros(t.dims());
        blank.set_slice(&modes, &idx, &s).unwrap();
        // every element of the slice matches, everything else stays zero
        for i in all_indices(t.dims()) {
            let inside = modes.iter().zip(&idx).all(|(&m, &v)| i[m - 1] + 1 == v);
            let o = offset(t.dims(), &i);
            let want = if inside { t.data()[o] } else { 0.0 };
            prop_assert_eq!(blank.data()[o], want);
        }
    }

    #[test]
    fn csv_slice_round_trip(rows in 1usize..6, cols in 1usize..6, vals in prop::collection::vec(-1e6f64..1e6, 36)) {
        let mut text = String::new();
        for r in 0..rows {
            let line: Vec<String> = (0..cols).map(|c| format!("{:?}", vals[r * cols + c])).collect();
            text.push_str(&line.join(","));
            text.push('\n');
        }
        let (r, c, v) = parse_csv_slice(&text, "s.csv").unwrap();
        prop_assert_eq!((r, c), (rows, cols));
        prop_assert_eq!(&v[..], &vals[..rows * cols]);
    }
}
