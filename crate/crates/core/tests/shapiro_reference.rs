//! Cross-validation of the Shapiro-Wilk implementation against
//! `scipy.stats.shapiro` (scipy 1.15.3, itself the AS R94 reference port)
//! on twenty fixed seeded vectors spanning normal, uniform, exponential and
//! t(3) samples at n in {20, 100, 500}.
//!
//! Regenerate the frozen values by piping the output of
//! `cargo run -p sbnn-core --example dump_reference_vectors` through
//! `scipy.stats.shapiro`.

use sbnn_core::shapiro::{reference_vectors, shapiro_wilk};

const REFS: &[(&str, f64, f64)] = &[
    ("normal_20_s1", 9.88796144806091237e-01, 9.96262230622459999e-01),
    ("normal_20_s2", 9.37051661934822144e-01, 2.10789924664392170e-01),
    ("normal_100_s1", 9.88058772021385034e-01, 5.12550754378279905e-01),
    ("normal_100_s2", 9.91040517908298391e-01, 7.48178688828225136e-01),
    ("normal_500_s1", 9.92174008772525262e-01, 9.98655822296665337e-03),
    ("normal_500_s2", 9.96954593098261066e-01, 4.76847330493181232e-01),
    ("uniform_20_s1", 9.36865792515327866e-01, 2.09077771579849081e-01),
    ("uniform_20_s2", 9.14967650218151407e-01, 7.93101599512091165e-02),
    ("uniform_100_s1", 9.56553494894703538e-01, 2.30107874018901882e-03),
    ("uniform_100_s2", 9.36918784431177931e-01, 1.25689103256492450e-04),
    ("uniform_500_s1", 9.54520627761380136e-01, 2.74220105174481679e-11),
    ("uniform_500_s2", 9.55834865309477144e-01, 4.38781164484947813e-11),
    ("exponential_20_s1", 8.63471247078967608e-01, 9.03963213982626225e-03),
    ("exponential_100_s1", 8.30189166205404616e-01, 2.34771245780718737e-09),
    ("exponential_500_s1", 7.90655067810795864e-01, 7.49246845927708566e-25),
    ("exponential_100_s2", 7.95585272868659654e-01, 1.81623991586876475e-10),
    ("t3_20_s1", 9.48465833784192025e-01, 3.44402074379760115e-01),
    ("t3_100_s1", 8.64646261082348211e-01, 4.28944147548059814e-08),
    ("t3_500_s1", 9.24607642143528752e-01, 3.85763838530829118e-15),
    ("t3_100_s2", 8.55712344874966058e-01, 1.93919287903958537e-08),
];

#[test]
fn w_and_p_match_scipy_within_1e_3() {
    let vectors = reference_vectors();
    assert_eq!(vectors.len(), REFS.len());
    let mut worst_w: f64 = 0.0;
    let mut worst_p: f64 = 0.0;
    for ((label, values), &(ref_label, ref_w, ref_p)) in vectors.iter().zip(REFS) {
        assert_eq!(label, ref_label, "fixture order drifted");
        let (w, p) = shapiro_wilk(values).unwrap();
        let dw = (w - ref_w).abs();
        let dp = (p - ref_p).abs();
        assert!(dw <= 1e-3, "{label}: W={w} vs scipy {ref_w} (|d|={dw:.2e})");
        assert!(dp <= 1e-3, "{label}: p={p} vs scipy {ref_p} (|d|={dp:.2e})");
        worst_w = worst_w.max(dw);
        worst_p = worst_p.max(dp);
    }
    println!("worst |dW| = {worst_w:.3e}, worst |dp| = {worst_p:.3e}");
}

#[test]
fn fixed_seed_normal_500_matches_reference_p() {
    // the n=500 standard-normal fixture agrees with the reference within 1e-3
    let vectors = reference_vectors();
    let (label, values) = &vectors[5];
    assert_eq!(label, "normal_500_s2");
    let (_, p) = shapiro_wilk(values).unwrap();
    assert!((p - 4.76847330493181232e-01).abs() <= 1e-3);
}

#[test]
fn fixed_seed_exponential_500_is_strongly_rejected() {
    let vectors = reference_vectors();
    let (label, values) = &vectors[14];
    assert_eq!(label, "exponential_500_s1");
    let (_, p) = shapiro_wilk(values).unwrap();
    assert!(p < 0.01, "p = {p}");
}
