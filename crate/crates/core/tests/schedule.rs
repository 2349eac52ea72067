use lddpo_core::optim::{adamw_step, adamw_update, lr_at_step, AdamWConfig, AdamWState, ScheduleConfig};
use lddpo_core::tinylm::{init_params, ModelGradients, Vocab};
use proptest::prelude::*;

#[test]
fn worked_examples() {
    let cfg = ScheduleConfig::new(1.0, 100, 0.10).unwrap();
    assert_eq!(lr_at_step(&cfg, 9).unwrap(), 1.0);
    assert_eq!(lr_at_step(&cfg, 55).unwrap(), 0.5);
    assert!(lr_at_step(&cfg, 99).unwrap() < 1e-3);
    assert!(lr_at_step(&cfg, 100).is_err());

    let (mut th, mut m, mut v) = ([1.0], [0.0], [0.0]);
    let adam = AdamWConfig { weight_decay: 0.0, ..Default::default() };
    adamw_update(&mut th, &[1.0], &mut m, &mut v, 1, &adam, 0.1);
    assert!((th[0] - 0.9).abs() < 1e-6);

    let (mut th, mut m, mut v) = ([1.0], [0.0], [0.0]);
    adamw_update(&mut th, &[0.0], &mut m, &mut v, 1, &AdamWConfig { weight_decay: 0.01, ..Default::default() }, 0.1);
    assert!((th[0] - 0.999).abs() < 1e-15);
}

proptest! {
    #[test]
    fn warmup_boundary_and_decay(peak in 1e-6f64..1.0, total in 2usize..5000, frac in 0.0f64..0.5) {
        let cfg = match ScheduleConfig::new(peak, total, frac) {
            Ok(c) => c,
            Err(_) => return Ok(()),
        };
        let w = cfg.warmup_steps();
        if w > 0 {
            prop_assert_eq!(lr_at_step(&cfg, w - 1).unwrap(), peak);
        }
        prop_assert_eq!(lr_at_step(&cfg, w).unwrap(), peak);
        let mut prev = f64::INFINITY;
        for s in w..total {
            let lr = lr_at_step(&cfg, s).unwrap();
            prop_assert!(lr <= prev && lr >= 0.0);
            prev = lr;
        }
        if total - w >= 100 {
            prop_assert!(prev < 1e-3 * peak);
        }
    }

    #[test]
    fn zero_gradient_is_multiplicative_decay(seed in any::<u64>(), lr in 0.0f64..1.0, wd in 0.0f64..0.1) {
        let mut p = init_params(seed, Vocab::with_size(5).unwrap(), 2, 1.0).unwrap();
        let before = p.clone();
        let mut st = AdamWState::new(&p, AdamWConfig { weight_decay: wd, ..Default::default() }).unwrap();
        let zero = ModelGradients::zeros_like(&p);
        adamw_step(&mut p, &zero, &mut st, lr).unwrap();
        for (a, b) in before.slices().iter().zip(p.slices().iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert_eq!(*y, *x - lr * (wd * *x));
            }
        }
    }
}
