#![allow(dead_code)]

use mimo_diag_core::optim::{CrScenario, IcScenario};
use mimo_diag_core::{ComplexMatrix, TransmitCovariance};

pub fn real(rows: &[[f64; 2]; 2]) -> ComplexMatrix {
    ComplexMatrix::from_real_rows(rows).unwrap()
}

/// Point-to-point pair printed in the system-model example.
pub fn section2_pair() -> (ComplexMatrix, TransmitCovariance) {
    let h = real(&[[0.8147, 0.1270], [0.9058, 0.9134]]);
    let s = real(&[[0.2896, -0.5654], [-0.5654, 1.8275]]);
    (h, TransmitCovariance::new(s).unwrap())
}

pub fn h11() -> ComplexMatrix {
    real(&[[2.0108, 0.3083], [0.0256, -0.9383]])
}

pub fn h12() -> ComplexMatrix {
    real(&[[-0.2253, -0.1253], [0.0546, -0.0950]])
}

pub fn h21() -> ComplexMatrix {
    real(&[[0.4270, -0.5780], [0.1946, 0.0199]])
}

pub fn h22() -> ComplexMatrix {
    real(&[[1.6742, 0.5301], [0.1250, -0.9521]])
}

/// Printed WMMSE precoders of the two-user example.
pub fn printed_precoders() -> [ComplexMatrix; 2] {
    [
        real(&[[2.4376, -0.6131], [1.4874, 1.2125]]),
        real(&[[1.9083, -1.0758], [1.0682, 2.0150]]),
    ]
}

pub fn example1() -> IcScenario {
    IcScenario::with_white_noise([[h11(), h12()], [h21(), h22()]], 10.0).unwrap()
}

pub fn example2() -> CrScenario {
    CrScenario::new(h11(), h21(), 10.0, 2.0).unwrap()
}

pub fn printed_cr_covariance() -> [[f64; 2]; 2] {
    [[5.7228, 1.4217], [1.4217, 4.2772]]
}

/// Columns of `m` equal `printed` up to a real sign per column.
pub fn max_column_sign_error(m: &ComplexMatrix, printed: &[[f64; 2]; 2]) -> f64 {
    let mut worst = 0.0_f64;
    for j in 0..2 {
        let plus: f64 = (0..2)
            .map(|i| (m[(i, j)].re - printed[i][j]).abs().max(m[(i, j)].im.abs()))
            .fold(0.0, f64::max);
        let minus: f64 = (0..2)
            .map(|i| (-m[(i, j)].re - printed[i][j]).abs().max(m[(i, j)].im.abs()))
            .fold(0.0, f64::max);
        worst = worst.max(plus.min(minus));
    }
    worst
}
