//! Scalar expressions on a chart: parsing, symbolic derivatives, evaluation
//! and exact hex-float round trips.

use cotangent_lab::geometry::Chart;
use cotangent_lab::hexfloat;

pub fn run() -> anyhow::Result<()> {
    let chart = Chart::new(["x", "y"])?;
    let f = chart.parse("x^2*sin(y) + exp(-x)/(1 + y^2)")?;
    let p = [0.3, -1.2];
    println!("f        = {}", f.to_source(chart.coords()));
    for (k, name) in chart.coords().iter().enumerate() {
        let d = f.differentiate(k);
        println!("∂f/∂{name}   = {}  ->  {:.12}", d.to_source(chart.coords()), d.eval(&p)?);
    }

    // Singular coefficients are reported, not silently turned into NaN.
    let g = chart.parse("1/(x^2 + y^2)")?;
    match g.eval(&[0.0, 0.0]) {
        Ok(v) => anyhow::bail!("expected a singularity, got {v}"),
        Err(e) => println!("1/(x²+y²) at the origin: {e}"),
    }

    let v = f.eval(&p)?;
    let hex = hexfloat::format(v);
    let back = hexfloat::parse(&hex).ok_or_else(|| anyhow::anyhow!("unparsable {hex}"))?;
    println!("f(p) = {v:?} = {hex}");
    anyhow::ensure!(back.to_bits() == v.to_bits(), "hex round trip changed the value");
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run()
}
