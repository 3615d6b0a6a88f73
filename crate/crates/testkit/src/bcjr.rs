use otfs_core::coding::{conv_encode, CodeSpec};

fn lse(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// A-posteriori coded-bit and message-bit LLRs by enumerating every
/// message of length `info_len`.
pub fn exhaustive_app(llr: &[f64], info_len: usize, spec: &CodeSpec) -> (Vec<f64>, Vec<f64>) {
    let coded = spec.coded_len(info_len);
    assert_eq!(llr.len(), coded);
    let mut c0 = vec![Vec::new(); coded];
    let mut c1 = vec![Vec::new(); coded];
    let mut u0 = vec![Vec::new(); info_len];
    let mut u1 = vec![Vec::new(); info_len];
    for msg in 0u64..(1 << info_len) {
        let info: Vec<u8> = (0..info_len).map(|i| ((msg >> i) & 1) as u8).collect();
        let cw = conv_encode(&info, spec).unwrap();
        let metric: f64 = cw
            .iter()
            .zip(llr)
            .map(|(&b, &l)| if b == 0 { 0.5 * l } else { -0.5 * l })
            .sum();
        for (i, &b) in cw.iter().enumerate() {
            if b == 0 { &mut c0[i] } else { &mut c1[i] }.push(metric);
        }
        for (i, &b) in info.iter().enumerate() {
            if b == 0 { &mut u0[i] } else { &mut u1[i] }.push(metric);
        }
    }
    let f = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| lse(x) - lse(y)).collect()
    };
    (f(&c0, &c1), f(&u0, &u1))
}
