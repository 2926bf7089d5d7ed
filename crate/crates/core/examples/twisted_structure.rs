//! The weakly foliated fields on R⁴: the Jacobiator is `∧³π♯ω` off the
//! axis, `φ = ω/2` makes them twisted Poisson there, and the coefficient of
//! the bracket relation blows up towards the axis.

use cotangent_lab::catalog;
use cotangent_lab::classify::{coordinate_brackets_at, jacobiator_in_image_at, three_form_labels, twisted_check};

pub fn run() -> anyhow::Result<()> {
    for id in ["r4_weak_i0", "r4_weak_i1"] {
        let s = catalog::load(id)?;
        let labels = three_form_labels(&s.pi);
        let p = [0.5, 0.25, 0.1, -0.2];
        let solve = jacobiator_in_image_at(&s.pi, &p, 1e-9)?;
        let (x, y) = (p[0], p[1]);
        let expected = 4.0 * x / (x * x + y * y).powi(2);
        let (k, w) = labels
            .iter()
            .zip(&solve.omega)
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("four components");
        println!("{id}: ω_{k} = {w:.6} (4x/r⁴ = {expected:.6}), residual {:.1e}", solve.residual);

        let phi = s.phi.as_ref().expect("catalog entry declares φ");
        let sample: Vec<Vec<f64>> = (1..=8).map(|k| vec![0.1 * k as f64, 0.3, -0.5, 0.2]).collect();
        let t = twisted_check(&s.pi, phi, &sample, 1e-9)?;
        println!("  ½[π,π] = ∧³π♯φ: {} (bracket {:.1e}, dφ {:.1e})", t.passed, t.bracket_residual, t.closedness_residual);
        anyhow::ensure!(t.passed, "{id} should be twisted Poisson off the axis");

        // [π♯dy, π♯du] = c π♯dy with c = 2x^{i+1}/(x²+y²): compare the
        // limits along the two axes
        for r in [1e-1, 1e-2, 1e-3] {
            let mut row = Vec::new();
            for q in [[r, r * 1e-3, 0.0, 0.0], [r * 1e-3, r, 0.0, 0.0]] {
                let br = coordinate_brackets_at(&s.pi, &q)?;
                let yu = br.iter().find(|((i, j), _)| (*i, *j) == (1, 2)).map(|(_, v)| v.clone()).expect("pair (y, u)");
                let py = s.pi.matrix_at(&q)?.column(1).into_owned();
                row.push(yu.dot(&py) / py.norm_squared());
            }
            println!("  r = {r:.0e}: coefficient {:.3e} along x, {:.3e} along y", row[0], row[1]);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run()
}
