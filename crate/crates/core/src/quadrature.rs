//! Adaptive Gauss–Kronrod (7/15) integration of small vector-valued integrands.
//!
//! All components share one partition of the interval; an interval is split
//! while any component's Kronrod–Gauss discrepancy exceeds its share of the
//! requested relative tolerance.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 4000;

#[derive(Clone, Copy, Debug)]
struct Piece<const D: usize> {
    a: f64,
    b: f64,
    value: [f64; D],
    error: [f64; D],
}

fn kronrod<const D: usize>(f: &impl Fn(f64) -> [f64; D], a: f64, b: f64) -> Piece<D> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = [0.0; D];
    let mut gauss = [0.0; D];

    let fc = f(center);
    for d in 0..D {
        kron[d] = WGK[7] * fc[d];
        gauss[d] = WG[3] * fc[d];
    }
    for (j, &x) in XGK[..7].iter().enumerate() {
        let lo = f(center - half * x);
        let hi = f(center + half * x);
        for d in 0..D {
            let sum = lo[d] + hi[d];
            kron[d] += WGK[j] * sum;
            if j % 2 == 1 {
                gauss[d] += WG[j / 2] * sum;
            }
        }
    }

    let mut value = [0.0; D];
    let mut error = [0.0; D];
    for d in 0..D {
        value[d] = kron[d] * half;
        error[d] = ((kron[d] - gauss[d]) * half).abs();
    }
    Piece { a, b, value, error }
}

/// Integrates `f` over `[a, b]` starting from the given interior breakpoints.
///
/// Returns the integral estimate and whether every component reached the
/// relative tolerance before the interval budget ran out.
pub(crate) fn integrate<const D: usize>(
    f: impl Fn(f64) -> [f64; D],
    breakpoints: &[f64],
    rel_tol: f64,
) -> ([f64; D], bool) {
    let mut pieces: Vec<Piece<D>> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| kronrod(&f, w[0], w[1]))
        .collect();

    loop {
        let mut total = [0.0; D];
        let mut err = [0.0; D];
        for p in &pieces {
            for d in 0..D {
                total[d] += p.value[d];
                err[d] += p.error[d];
            }
        }
        let converged = (0..D).all(|d| err[d] <= rel_tol * total[d].abs() || err[d] == 0.0);
        if converged || pieces.len() >= MAX_INTERVALS {
            return (total, converged);
        }

        // Split the piece contributing the largest relative error.
        let score = |p: &Piece<D>| {
            (0..D)
                .map(|d| if total[d] != 0.0 { p.error[d] / total[d].abs() } else { 0.0 })
                .fold(0.0, f64::max)
        };
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .map(|(i, p)| (i, score(p)))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        pieces.push(kronrod(&f, p.a, mid));
        pieces.push(kronrod(&f, mid, p.b));
    }
}
