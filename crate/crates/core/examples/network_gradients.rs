//! Forward pass, backpropagated gradients and a finite-difference check on a
//! small Q-network, followed by a few Adam steps on a fixed batch.

use geosteer::neural::{apply_update, OptimizerKind, OptimizerState, QNetwork, TrainingBatch};
use geosteer::rng::derived;
use rand::Rng;

fn main() -> geosteer::Result<()> {
    let mut rng = derived(1, &[]);
    let mut net = QNetwork::new(&[4, 16, 8, 3], &mut rng)?;
    println!("dims {:?}, {} parameters", net.dims(), net.param_count());

    let rows = 8;
    let batch = TrainingBatch {
        observations: (0..rows * 4).map(|_| rng.random_range(-1.0..1.0)).collect(),
        actions: (0..rows).map(|_| rng.random_range(0..3)).collect(),
        targets: (0..rows).map(|_| rng.random_range(-2.0..2.0)).collect(),
        error_clip: None,
    };
    let (loss, grads) = net.loss_and_gradients(&batch)?;
    println!("loss {loss:.6}, largest gradient {:.6}", grads.max_abs());

    // central difference on one weight of each layer
    let h = 1e-6;
    for l in 0..net.layers.len() {
        let mut plus = net.clone();
        plus.layers[l].weights[0] += h;
        let mut minus = net.clone();
        minus.layers[l].weights[0] -= h;
        let numeric = (plus.loss_and_gradients(&batch)?.0 - minus.loss_and_gradients(&batch)?.0) / (2.0 * h);
        println!("layer {l}: analytic {:+.8} numeric {numeric:+.8}", grads.layers[l].weights[0]);
    }

    let mut opt = OptimizerState::new(OptimizerKind::default(), &net);
    for step in 1..=200 {
        let (loss, g) = net.loss_and_gradients(&batch)?;
        apply_update(&mut net, &g, &mut opt);
        if step % 50 == 0 {
            println!("step {step}: loss {loss:.6}");
        }
    }
    Ok(())
}
