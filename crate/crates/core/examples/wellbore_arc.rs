//! Circular-arc wellbore segments: depth change along one stage for a few
//! start inclinations and steering changes.

use geosteer::env::trajectory::min_curvature_segment;

fn main() -> geosteer::Result<()> {
    let (n_sub, dx) = (10, 10.0);
    for start in [0.0, 5.0, -10.0] {
        for delta in [-5.0, 0.0, 5.0] {
            let dz = min_curvature_segment(start, delta, n_sub, dx)?;
            let cells: Vec<String> = dz.iter().map(|z| format!("{z:7.3}")).collect();
            println!("inc {start:>5.1} {delta:>+5.1}: {}", cells.join(""));
        }
    }

    // a straight hold at constant inclination is a line
    let hold = min_curvature_segment(3.0, 0.0, 1, 100.0)?;
    println!("hold 3 deg over 100 m: {:.6} (tan: {:.6})", hold[0], 100.0 * 3f64.to_radians().tan());

    match min_curvature_segment(84.0, 5.0, 10, 10.0) {
        Ok(_) => println!("unexpected"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
