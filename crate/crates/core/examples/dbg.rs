use bm_spectra::body::*;
use bm_spectra::quad::*;
use nalgebra::DVector;

fn main() {
    let lq = make_body(BodySpec::lq_ball_regularized(2, 3.0, 0.05)).unwrap();
    // h from Newton dual vs direct ascent optimizer
    for t in [0.0f64, 0.01, 0.3, 0.7853] {
        let y = DVector::from_vec(vec![t.cos(), t.sin()]);
        let h_newton = lq.h(&y);
        let h_opt = support_from_gauge(&lq, &y).unwrap();
        println!("t={t:.4}: h_newton={h_newton:.12} h_ascent={h_opt:.12} diff={:.2e}", (h_newton-h_opt).abs());
    }
    // continuum check of the pushforward identity with dense panels
    let g = |t: f64| (4.0*t).cos();
    let rule = composite(24, &uniform_breaks(0.0, 2.0*std::f64::consts::PI, 800));
    let mut z_cone = 0.0; let mut int_cone = 0.0;
    let mut z_gauge = 0.0; let mut int_gauge = 0.0;
    let eps = 1e-5;
    let hval = |t: f64| { let y = DVector::from_vec(vec![t.cos(), t.sin()]); lq.h(&y) };
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let hpp = (hval(t+eps) - 2.0*hval(t) + hval(t-eps)) / (eps*eps);
        let cone = hval(t) * (hval(t) + hpp);
        let y = DVector::from_vec(vec![t.cos(), t.sin()]);
        let tx = lq.map_t(&y);
        let gt = g(tx[1].atan2(tx[0]));
        z_cone += w * cone; int_cone += w * cone * gt;
        let phi = lq.phi(&y);
        let gauge = phi.powi(-2);
        z_gauge += w * gauge; int_gauge += w * gauge * g(t);
    }
    println!("continuum: int g(T) dnu* = {:.10}  int g dnu = {:.10}  diff = {:.3e}",
             int_cone/z_cone, int_gauge/z_gauge, (int_cone/z_cone - int_gauge/z_gauge).abs());
}
