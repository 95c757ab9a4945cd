//! Reverse-mode gradients from the tape against central finite differences.

use pose_attack::autodiff::Tape;

fn f(x: &[f64]) -> pose_attack::autodiff::Result<(f64, Vec<f64>)> {
    let tape = Tape::new();
    let v = tape.leaf(x.to_vec(), &[x.len()])?;
    let y = v.sin()?.mul(v.exp()?)?.tanh()?.sum()?;
    let grads = tape.backward(y)?;
    Ok((y.item(), grads.wrt(v)))
}

fn main() -> pose_attack::autodiff::Result<()> {
    let x = vec![0.3, -1.2, 2.0, 0.05];
    let (value, analytic) = f(&x)?;
    println!("f(x) = {value:.6}");
    let h = 1e-6;
    for i in 0..x.len() {
        let (mut up, mut down) = (x.clone(), x.clone());
        up[i] += h;
        down[i] -= h;
        let numeric = (f(&up)?.0 - f(&down)?.0) / (2.0 * h);
        println!("d/dx{i}: tape {:+.9}  finite difference {:+.9}", analytic[i], numeric);
        assert!((analytic[i] - numeric).abs() < 1e-6);
    }
    Ok(())
}
