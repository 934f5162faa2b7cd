use penreg::data::{
    generate_phantom, generate_phantom_with_geometry, perturb_gaussian, perturb_rotation, PhantomSpec, RotationParams,
    DEFAULT_NOISE_VARIANCE,
};

#[test]
fn every_class_appears_in_most_phantoms() {
    let spec = PhantomSpec::default();
    let n = spec.classes.len();
    let mut present = vec![0usize; n];
    for seed in 0..100 {
        let s = generate_phantom(&spec, seed).unwrap();
        assert!(s.labels.labels.iter().all(|&l| (l as usize) < n));
        let mut seen = vec![false; n];
        for &l in &s.labels.labels {
            seen[l as usize] = true;
        }
        for name in ["BG", "WM", "GM"] {
            assert!(seen[spec.classes.index_of(name).unwrap()], "seed {seed} lacks {name}");
        }
        for (c, &s) in seen.iter().enumerate() {
            present[c] += s as usize;
        }
    }
    for (c, &k) in present.iter().enumerate() {
        assert!(k >= 95, "class {} present in only {k}/100 phantoms", spec.classes.name(c));
    }
}

#[test]
fn layers_are_radially_nested() {
    let spec = PhantomSpec::default();
    let wm = spec.classes.index_of("WM").unwrap() as u8;
    let skin = spec.classes.index_of("Skin").unwrap() as u8;
    for seed in 0..25 {
        let (s, geom) = generate_phantom_with_geometry(&spec, seed).unwrap();
        let mut wm_max = f64::NEG_INFINITY;
        let mut skin_min = f64::INFINITY;
        for y in 0..s.labels.height {
            for x in 0..s.labels.width {
                let rho = geom.normalized_radius(y, x);
                match s.labels.get(y, x) {
                    l if l == wm => {
                        wm_max = wm_max.max(rho);
                        assert_eq!(geom.ring_index(y, x), Some(7));
                    }
                    l if l == skin => {
                        skin_min = skin_min.min(rho);
                        assert_eq!(geom.ring_index(y, x), Some(0));
                    }
                    _ => {}
                }
            }
        }
        assert!(wm_max < skin_min, "seed {seed}: WM reaches {wm_max}, skin starts at {skin_min}");
    }
}

#[test]
fn perturbations_preserve_shape_and_range() {
    let spec = PhantomSpec::default();
    for seed in 0..10 {
        let s = generate_phantom(&spec, seed).unwrap();
        let noisy = perturb_gaussian(&s, seed + 100, DEFAULT_NOISE_VARIANCE).unwrap();
        let rotated = perturb_rotation(&s, seed + 200, &RotationParams::default()).unwrap();
        for p in [&noisy, &rotated] {
            assert_eq!((p.image.height, p.image.width), (s.image.height, s.image.width));
            assert!(p.image.data.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(p.labels.labels.iter().all(|&l| (l as usize) < spec.classes.len()));
        }
        assert_eq!(noisy.labels, s.labels);
        assert_eq!(rotated, perturb_rotation(&s, seed + 200, &RotationParams::default()).unwrap());
    }
}
