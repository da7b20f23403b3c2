use shell_spectra_core::eigsolve::smallest_eigs;
use shell_spectra_core::randomfield::{FieldExpansion, ShapeFamily};
use shell_spectra_core::shellfem::*;

fn main() {
    for (nx, ny, p, t) in [(6usize, 6usize, 2usize, 0.1f64), (6, 6, 3, 0.1), (8, 8, 2, 0.1), (6, 6, 2, 0.15), (4, 6, 2, 0.1), (6, 6, 2, 0.2)] {
        let pr = ShellProblem {
            geometry: ShellGeometry::Cylinder,
            model: ShellModel::Naghdi,
            thickness: t,
            poisson: 1.0 / 3.0,
            field: FieldExpansion::new(1.0, ShapeFamily::General, 0).unwrap(),
            bc: BoundaryCondition::ClampedEnds,
            mode: ModeSpec::TwoD { nx, ny },
            p_order: p,
        };
        let pencil = assemble(&pr).unwrap();
        let pairs = smallest_eigs(pencil.k_term(0), pencil.mass(), 5, 1e-9).unwrap();
        let v: Vec<f64> = pairs.iter().map(|p| p.value).collect();
        println!("mesh {nx}x{ny} p={p} t={t}: N={} l1/l2={:.4} l2/l3={:.3} l={:.3e} {:.3e} {:.3e}", pencil.n(), v[0]/v[1], v[1]/v[2], v[0], v[1], v[2]);
    }
}
