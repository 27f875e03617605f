use xfg_core::*;

#[test]
fn probe_criterion8() {
    let e2 = VectorFieldFamily::euclidean(2);
    let grushin = VectorFieldFamily::grushin();
    for res in [81usize, 161, 321] {
        let g = Grid::uniform(BoxDomain::centered(2, 1.0), res).unwrap();
        let interior = BoxDomain::new(vec![-0.55, -0.55], vec![0.55, 0.55]).unwrap();
        let eps = [0.4, 0.2, 0.1, 0.05];

        let smooth = ScalarField::from_fn(g.clone(), |x| x[0] * x[1]).unwrap();
        let r1 = mollifier_approx_check(&smooth, &e2, &eps, &interior, 2.0).unwrap();
        println!("res={res} x1*x2 euclid: {:?} monotone={}", r1.rows, r1.monotone_within_noise);

        let kink = ScalarField::from_fn(g.clone(), |x| x[0].abs()).unwrap();
        let r2 = mollifier_approx_check(&kink, &e2, &eps, &interior, 2.0).unwrap();
        println!("res={res} |x1| euclid:  {:?} monotone={} ratio={}", r2.rows, r2.monotone_within_noise, r2.rows[3].1 / r2.rows[0].1);

        let r3 = mollifier_approx_check(&kink, &grushin, &eps, &interior, 2.0).unwrap();
        println!("res={res} |x1| grushin: {:?} ratio={}", r3.rows, r3.rows[3].1 / r3.rows[0].1);

        let r4 = mollifier_approx_check(&smooth, &grushin, &eps, &interior, 2.0).unwrap();
        println!("res={res} x1*x2 grushin: {:?} monotone={} ratio={}", r4.rows, r4.monotone_within_noise, r4.rows[3].1 / r4.rows[0].1);
    }
}
