//! Record a small program on the tape and pull every gradient out of one
//! reverse sweep — including through a linear solve and shared
//! subexpressions (fan-out).
//!
//! The program:  loss = <w, x> + <w, w>   where   x = A⁻¹ b.
//!
//! `w` is used twice; the tape accumulates both contributions. `A` and `b`
//! get gradients through the solve's adjoint rule, reusing the LU
//! factorization cached when the node was recorded.
//!
//! Run with: `cargo run --example tape_gradient`

use adjblas::{Activity, DenseMatrix, DenseVector, OpKind, Result, Tape, Value};

fn main() -> Result<()> {
    let a = DenseMatrix::from_rows(&[&[4.0, 1.0], &[1.0, 3.0]])?;
    let b = DenseVector::from_slice(&[1.0, 2.0])?;
    let w = DenseVector::from_slice(&[1.0, -1.0])?;

    let mut tape = Tape::new();
    let a_h = tape.record_input(Value::Matrix(a), Activity::Active)?;
    let b_h = tape.record_input(Value::Vector(b), Activity::Active)?;
    let w_h = tape.record_input(Value::Vector(w), Activity::Active)?;

    let x_h = tape.record_op(OpKind::Solve, &[a_h, b_h])?; // x = A⁻¹ b
    let wx_h = tape.record_op(OpKind::Dot, &[w_h, x_h])?; // <w, x>
    let ww_h = tape.record_op(OpKind::Dot, &[w_h, w_h])?; // <w, w>, fan-out on w
    let loss_h = tape.record_op(OpKind::Add, &[wx_h, ww_h])?;

    println!("recorded program:");
    print!("{}", tape.dump());
    println!("loss = {:?}", tape.value_of(loss_h)?.scalar());

    // One reverse sweep, seeded with d(loss)/d(loss) = 1.
    let store = tape.reverse(loss_h, Value::Scalar(1.0))?;

    let grad_w = store.adjoint_of(w_h)?.vector().expect("w is a vector");
    let grad_b = store.adjoint_of(b_h)?.vector().expect("b is a vector");
    let grad_a = store.adjoint_of(a_h)?.matrix().expect("A is a matrix");

    // d(loss)/dw = x + 2w: the dot rule once from <w,x>, twice from <w,w>.
    println!("d loss / dw = {:?}", grad_w.as_slice());
    // d(loss)/db = A^{-T} w via the solve adjoint.
    println!("d loss / db = {:?}", grad_b.as_slice());
    println!("d loss / dA =");
    for i in 0..2 {
        println!("  [{}, {}]", grad_a.get(i, 0), grad_a.get(i, 1));
    }

    // The reverse sweep borrows the tape immutably, so further gradients
    // (different seeds, even concurrent sweeps) need no re-recording.
    let again = tape.reverse(wx_h, Value::Scalar(1.0))?;
    println!(
        "d <w,x> / db = {:?}",
        again.adjoint_of(b_h)?.vector().expect("b is a vector").as_slice()
    );

    Ok(())
}
