//! Acceptance criteria, each checked against an oracle written here from the
//! definitions. Prints one PASS/FAIL line per criterion and exits non-zero if
//! any fails.

use std::collections::HashSet;
use std::f64::consts::{E, PI};
use std::time::Instant;

use bogo_core::bilinear::{
    main_theorem_experiment, qr_property_check, regularity_partition, variety_contained_in, BiSet, ExperimentConfig,
    FreimanLinearMap, RegularityConfig,
};
use bogo_core::bohr::{
    bohr_size_estimate, dense_difference_cover, find_min_r, large_spectrum_certify, size_bounds, verify_bohr_sum,
    weak_regular_radius_search, BohrSet, DenseCover,
};
use bogo_core::coset_prog::{
    change_basis, extract_subprogression, partial_projectivity, popular_difference_progression, BasisMove,
    CosetProgression, QuotientHom,
};
use bogo_core::fourier::quadruple_counts;
use bogo_core::group::{invariant_factors, make_group, Character, FiniteAbelianGroup, GroupElement, GroupSubset};
use bogo_core::lattice::{bounded_representation, span_cover};
use bogo_core::quasirandom::{box_norm, correlation_bound_check, one_sided_qr, BipartiteGraph};
use bogo_core::suites::{run_suite, SuiteConfig};
use num_bigint::BigInt;
use num_rational::Rational64;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn rng(stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0xACCE_5500 + stream)
}

// ------------------------------------------------------------ oracles

fn group(rng: &mut ChaCha8Rng, max_order: u64, max_rank: usize) -> FiniteAbelianGroup {
    loop {
        let rank = rng.random_range(1..=max_rank);
        let moduli: Vec<i64> = (0..rank).map(|_| rng.random_range(2..=max_order as i64)).collect();
        if moduli.iter().product::<i64>() as u64 <= max_order {
            return make_group(&moduli).unwrap();
        }
    }
}

fn coords(g: &FiniteAbelianGroup, mut idx: usize) -> Vec<u64> {
    g.moduli()
        .iter()
        .map(|&q| {
            let c = idx as u64 % q;
            idx /= q as usize;
            c
        })
        .collect()
}

fn index(g: &FiniteAbelianGroup, c: &[u64]) -> usize {
    let mut idx = 0usize;
    for (&x, &q) in c.iter().zip(g.moduli()).rev() {
        idx = idx * q as usize + x as usize;
    }
    idx
}

fn add(g: &FiniteAbelianGroup, a: usize, b: usize) -> usize {
    let (x, y) = (coords(g, a), coords(g, b));
    let s: Vec<u64> = x.iter().zip(&y).zip(g.moduli()).map(|((p, q), m)| (p + q) % m).collect();
    index(g, &s)
}

fn scale(g: &FiniteAbelianGroup, a: usize, k: i64) -> usize {
    let s: Vec<u64> = coords(g, a).iter().zip(g.moduli()).map(|(&p, &m)| (p as i64 * k).rem_euclid(m as i64) as u64).collect();
    index(g, &s)
}

fn sub(g: &FiniteAbelianGroup, a: usize, b: usize) -> usize {
    add(g, a, scale(g, b, -1))
}

fn lcm(moduli: &[u64]) -> u64 {
    moduli.iter().fold(1, |l, &q| l / num_integer::gcd(l, q) * q)
}

/// `χ(x)` as a numerator over the exponent.
fn char_num(g: &FiniteAbelianGroup, chi: &[u64], x: usize) -> u64 {
    let e = lcm(g.moduli());
    let xc = coords(g, x);
    chi.iter().zip(&xc).zip(g.moduli()).map(|((&c, &v), &q)| (c * v % q) * (e / q)).sum::<u64>() % e
}

fn within(g: &FiniteAbelianGroup, chi: &[u64], x: usize, rho: Rational64) -> bool {
    let e = lcm(g.moduli()) as i64;
    let n = char_num(g, chi, x) as i64;
    let d = n.min(e - n);
    (d as i128) * (*rho.denom() as i128) <= (*rho.numer() as i128) * e as i128
}

fn bohr(g: &FiniteAbelianGroup, freqs: &[Vec<u64>], rho: Rational64) -> Vec<bool> {
    (0..g.size()).map(|x| freqs.iter().all(|c| within(g, c, x, rho))).collect()
}

fn count(v: &[bool]) -> usize {
    v.iter().filter(|&&b| b).count()
}

fn random_char(rng: &mut ChaCha8Rng, g: &FiniteAbelianGroup) -> Vec<u64> {
    g.moduli().iter().map(|&q| rng.random_range(0..q)).collect()
}

fn to_char(c: &[u64]) -> Character {
    Character(c.to_vec())
}

fn sumset(g: &FiniteAbelianGroup, a: &[bool], b: &[bool]) -> Vec<bool> {
    let mut out = vec![false; g.size()];
    for x in (0..g.size()).filter(|&x| a[x]) {
        for y in (0..g.size()).filter(|&y| b[y]) {
            out[add(g, x, y)] = true;
        }
    }
    out
}

fn subset_of(a: &[bool], b: &[bool]) -> bool {
    a.iter().zip(b).all(|(&x, &y)| !x || y)
}

fn from_subset(s: &GroupSubset) -> Vec<bool> {
    (0..s.group().size()).map(|i| s.contains_idx(i)).collect()
}

/// Sums `Σ λ_i g_i` with `|λ_i| ≤ r`, by iterated sumsets.
fn span(g: &FiniteAbelianGroup, gens: &[usize], r: u64) -> Vec<bool> {
    let mut cur = vec![false; g.size()];
    cur[0] = true;
    for &x in gens {
        let mut mult = HashSet::new();
        let ord = (1..=g.size() as i64).find(|&k| scale(g, x, k) == 0).unwrap();
        for l in -(r.min(ord as u64) as i64)..=(r.min(ord as u64) as i64) {
            mult.insert(scale(g, x, l));
        }
        let mut next = vec![false; g.size()];
        for y in (0..g.size()).filter(|&y| cur[y]) {
            for &m in &mult {
                next[add(g, y, m)] = true;
            }
        }
        cur = next;
    }
    cur
}

// ------------------------------------------------------------ 1–5: Bohr sets

fn c1_size_bounds() -> Outcome {
    let mut rng = rng(1);
    let start = Instant::now();
    let mut doubled = 0;
    for i in 0..200 {
        let g = group(&mut rng, 2048, 3);
        let k = rng.random_range(0..=3);
        let freqs: Vec<Vec<u64>> = (0..k).map(|_| random_char(&mut rng, &g)).collect();
        let den = rng.random_range(2..=64);
        let rho = Rational64::new(rng.random_range(1..=den / 2), den);
        let size = count(&bohr(&g, &freqs, rho));
        let lhs = BigInt::from(size) * BigInt::from(*rho.denom()).pow(k as u32);
        let rhs = BigInt::from(*rho.numer()).pow(k as u32) * BigInt::from(g.order());
        if lhs < rhs {
            return Err(format!("instance {i}: |B| = {size} below ρ^k|G|"));
        }
        let lib = size_bounds(&BohrSet::new(&g, freqs.iter().map(|c| to_char(c)).collect(), rho).unwrap())
            .map_err(|e| format!("instance {i}: {e}"))?;
        if lib.size != size {
            return Err(format!("instance {i}: library size {} vs {size}", lib.size));
        }
        if rho * 2 <= Rational64::new(1, 2) {
            doubled += 1;
            let d = count(&bohr(&g, &freqs, rho * 2));
            if d as u128 > 4u128.pow(k as u32) * size as u128 || lib.doubled_size != Some(d) {
                return Err(format!("instance {i}: |B(2ρ)| = {d} vs |B(ρ)| = {size}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        return Err(format!("took {secs:.1}s"));
    }
    Ok(format!("200 instances, {doubled} with doubling clause, {secs:.2}s"))
}

struct Regular {
    g: FiniteAbelianGroup,
    freqs: Vec<Vec<u64>>,
    rho: Rational64,
}

const TENTH: (i64, i64) = (1, 10);

/// Weakly regular instances with `ε|G|/2` annuli, characters of small order.
fn regular_instances() -> Vec<Regular> {
    let mut rng = rng(2);
    let eta = Rational64::new(TENTH.0, TENTH.1);
    let mut out = Vec::new();
    while out.len() < 50 {
        let g = group(&mut rng, 512, 2);
        let e = lcm(g.moduli());
        let k = rng.random_range(1..=2);
        let freqs: Vec<Vec<u64>> = (0..k)
            .map(|_| {
                let divs: Vec<u64> = (1..=e.min(10)).filter(|d| e % d == 0).collect();
                let d = *divs.choose(&mut rng).unwrap();
                let c = random_char(&mut rng, &g);
                // Scale so the values lie in (1/d)ℤ.
                c.iter().zip(g.moduli()).map(|(&v, &q)| v * (e / d) % q).collect()
            })
            .collect();
        let chars: Vec<Character> = freqs.iter().map(|c| to_char(c)).collect();
        if let Ok(rho) = weak_regular_radius_search(&g, &chars, Rational64::new(1, 10), Rational64::new(2, 5), eta, eta / 2) {
            out.push(Regular { g, freqs, rho });
        }
    }
    out
}

fn distinct(freqs: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let mut out: Vec<Vec<u64>> = Vec::new();
    for f in freqs {
        if !out.contains(f) {
            out.push(f.clone());
        }
    }
    out
}

fn c2_size_formula(inst: &[Regular]) -> Outcome {
    let start = Instant::now();
    let tenth = Rational64::new(TENTH.0, TENTH.1);
    let mut worst = 0.0f64;
    for (i, r) in inst.iter().enumerate() {
        let order = r.g.order() as i64;
        let annulus = count(&bohr(&r.g, &r.freqs, r.rho + tenth)) - count(&bohr(&r.g, &r.freqs, r.rho));
        if annulus as i64 * 20 > order {
            return Err(format!("instance {i}: radius search returned a non-regular radius"));
        }
        let chars: Vec<Character> = r.freqs.iter().map(|c| to_char(c)).collect();
        let est = bohr_size_estimate(&r.g, &chars, r.rho, tenth, tenth).map_err(|e| e.to_string())?;
        let size = count(&bohr(&r.g, &r.freqs, r.rho)) as f64;
        let err = (est.estimate - size).abs();
        worst = worst.max(err / order as f64);
        if err > 0.2 * order as f64 {
            return Err(format!("instance {i}: estimate {} vs |B| = {size}", est.estimate));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 120.0 {
        return Err(format!("took {secs:.1}s"));
    }
    Ok(format!("{} instances, worst |est - |B||/|G| = {worst:.4}, {secs:.2}s", inst.len()))
}

fn c3_large_spectrum(inst: &[Regular]) -> Outcome {
    let tenth = Rational64::new(TENTH.0, TENTH.1);
    let (mut large, mut scanned) = (0, 0);
    for (i, r) in inst.iter().enumerate() {
        let g = &r.g;
        let b = bohr(g, &r.freqs, r.rho);
        let gamma = distinct(&r.freqs);
        let k_box = (8.0 * E * gamma.len() as f64 / 0.01).ceil() as i64;
        let e = lcm(g.moduli()) as f64;
        let chars: Vec<Character> = r.freqs.iter().map(|c| to_char(c)).collect();
        for chi_idx in 0..g.size() {
            scanned += 1;
            let chi = coords(g, chi_idx);
            let (mut re, mut im) = (0.0, 0.0);
            for x in (0..g.size()).filter(|&x| b[x]) {
                let t = -2.0 * PI * char_num(g, &chi, x) as f64 / e;
                re += t.cos();
                im += t.sin();
            }
            let coef = (re * re + im * im).sqrt() / g.order() as f64;
            if coef < 0.1 - 1e-9 {
                continue;
            }
            large += 1;
            let cert = large_spectrum_certify(g, &chars, r.rho, tenth, tenth, &to_char(&chi)).map_err(|e| e.to_string())?;
            let Some(a) = cert.representation else {
                return Err(format!("instance {i}: no representation for χ = {chi:?} with coefficient {coef:.4}"));
            };
            if a.iter().any(|&ai| ai.abs() > k_box) {
                return Err(format!("instance {i}: coefficient outside [-{k_box}, {k_box}]"));
            }
            let sum: Vec<u64> = (0..g.rank())
                .map(|j| {
                    let q = g.moduli()[j] as i64;
                    gamma.iter().zip(&a).map(|(c, &ai)| c[j] as i64 * ai).sum::<i64>().rem_euclid(q) as u64
                })
                .collect();
            if sum != chi {
                return Err(format!("instance {i}: representation does not sum to χ"));
            }
        }
    }
    Ok(format!("{} instances, {scanned} characters scanned, {large} large, all certified", inst.len()))
}

fn c4_bohr_sum() -> Outcome {
    let mut rng = rng(4);
    let radii = [Rational64::new(1, 8), Rational64::new(1, 6), Rational64::new(1, 4)];
    let mut found = 0;
    let mut rs = Vec::new();
    while found < 20 {
        let g = group(&mut rng, 256, 2);
        let f1: Vec<Vec<u64>> = (0..rng.random_range(1..=2)).map(|_| random_char(&mut rng, &g)).collect();
        let f2: Vec<Vec<u64>> = (0..rng.random_range(1..=2)).map(|_| random_char(&mut rng, &g)).collect();
        let (r1, r2) = (*radii.choose(&mut rng).unwrap(), *radii.choose(&mut rng).unwrap());
        let rhs = sumset(&g, &bohr(&g, &f1, r1), &bohr(&g, &f2, r2));
        if rhs.iter().all(|&b| b) {
            continue;
        }
        found += 1;
        let b1 = BohrSet::new(&g, f1.iter().map(|c| to_char(c)).collect(), r1).unwrap();
        let b2 = BohrSet::new(&g, f2.iter().map(|c| to_char(c)).collect(), r2).unwrap();
        let r = find_min_r(&b1, &b2).map_err(|e| e.to_string())?.ok_or("find_min_r found no R")?;
        rs.push(r);
        if !verify_bohr_sum(&b1, &b2, r).map_err(|e| e.to_string())?.holds {
            return Err(format!("verify_bohr_sum false at R = {r}"));
        }
        // Independent containment at the same R, with the dual as a group.
        let dual = g.dual();
        let idx = |f: &[Vec<u64>]| f.iter().map(|c| index(&dual, c)).collect::<Vec<_>>();
        let (s1, s2) = (span(&dual, &idx(&f1), r), span(&dual, &idx(&f2), r));
        let lambda: Vec<Vec<u64>> = (0..dual.size()).filter(|&i| s1[i] && s2[i]).map(|i| coords(&dual, i)).collect();
        if !subset_of(&bohr(&g, &lambda, Rational64::new(1, 4)), &rhs) {
            return Err(format!("oracle rejects the containment at R = {r}"));
        }
        if verify_bohr_sum(&b1, &b2, 0).map_err(|e| e.to_string())?.holds {
            return Err("R = 0 control returned true".into());
        }
    }
    Ok(format!("20 instances, R values {rs:?}, R = 0 control false throughout"))
}

fn c5_dense_difference() -> Outcome {
    let mut rng = rng(5);
    for i in 0..100 {
        let g = group(&mut rng, 256, 2);
        let k = rng.random_range(1..=2);
        let freqs: Vec<Vec<u64>> = (0..k).map(|_| random_char(&mut rng, &g)).collect();
        let den = rng.random_range(2..=16);
        let rho = Rational64::new(rng.random_range(1..=den / 2), den);
        let b = bohr(&g, &freqs, rho);
        let mut pts: Vec<usize> = (0..g.size()).filter(|&x| b[x]).collect();
        pts.shuffle(&mut rng);
        let spare = pts.len() / 4usize.pow(k as u32 + 1);
        let a: Vec<usize> = pts[rng.random_range(0..=spare)..].to_vec();
        let mut diff = vec![false; g.size()];
        for &x in &a {
            for &y in &a {
                diff[sub(&g, x, y)] = true;
            }
        }
        if !subset_of(&bohr(&g, &freqs, rho / 2), &diff) {
            return Err(format!("instance {i}: A - A misses part of B(ρ/2)"));
        }
        let lib = dense_difference_cover(
            &GroupSubset::from_indices(&g, a.iter().copied()),
            &BohrSet::new(&g, freqs.iter().map(|c| to_char(c)).collect(), rho).unwrap(),
        )
        .map_err(|e| e.to_string())?;
        if lib != (DenseCover::Checked { holds: true }) {
            return Err(format!("instance {i}: library returned {lib:?}"));
        }
    }
    Ok("100 dense subsets, A - A ⊇ B(Γ; ρ/2) in every case".into())
}

// ------------------------------------------------------------ 6: lattice

fn budget(k: usize, bound: u64) -> u64 {
    let k = k as f64;
    (8.0 * k * k * ((k.ln() + 2.0) + (bound as f64).ln() + 2.0)).ceil() as u64
}

fn c6_span_cover() -> Outcome {
    let mut rng = rng(6);
    let mut max_len = 0;
    for i in 0..100 {
        let g = group(&mut rng, 10_000, 2);
        let k = rng.random_range(1..=4);
        let r = rng.random_range(1..=5u64);
        let a: Vec<usize> = (0..k).map(|_| rng.random_range(0..g.size())).collect();
        let full = span(&g, &a, r);
        let pts: Vec<usize> = (0..g.size()).filter(|&x| full[x]).collect();
        let take = rng.random_range(1..=pts.len().min(50));
        let b: Vec<usize> = pts.choose_multiple(&mut rng, take).copied().collect();
        let elems: Vec<GroupElement> = a.iter().map(|&x| g.element_at(x)).collect();
        let cover = span_cover(&g, &GroupSubset::from_indices(&g, b.iter().copied()), &elems, r).map_err(|e| e.to_string())?;
        let chosen: Vec<usize> = cover.vectors.iter().map(|v| g.index_of(v)).collect();
        if chosen.iter().any(|c| !b.contains(c)) {
            return Err(format!("instance {i}: cover uses an element outside B"));
        }
        let reach = span(&g, &chosen, cover.coefficient_bound);
        if b.iter().any(|&x| !reach[x]) {
            return Err(format!("instance {i}: B not inside ⟨b⟩_S with S = {}", cover.coefficient_bound));
        }
        max_len = max_len.max(chosen.len());
        if chosen.len() as u64 > budget(k, r) {
            return Err(format!("instance {i}: ℓ = {} above budget {}", chosen.len(), budget(k, r)));
        }
        // Representations of box vectors in the span of the preimages.
        let z = &cover.preimages;
        for _ in 0..5 {
            let mut w = vec![0i64; k];
            for v in z {
                let c = rng.random_range(-2..=2);
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi += c * vi);
            }
            if w.iter().any(|x| x.unsigned_abs() > r) {
                continue;
            }
            let lambda = bounded_representation(&w, z, r, r).map_err(|e| e.to_string())?;
            let fact: i64 = (1..=k as i64).product();
            let limit = fact * (r as i64).pow(k as u32 + 1) * (r as i64 + z.len() as i64);
            let back: Vec<i64> = (0..k).map(|c| lambda.iter().zip(z).map(|(l, v)| l * v[c]).sum()).collect();
            if back != w || lambda.iter().any(|l| l.abs() > limit) {
                return Err(format!("instance {i}: bounded representation {lambda:?} of {w:?} fails"));
            }
        }
    }
    Ok(format!("100 instances, longest cover ℓ = {max_len}"))
}

// ------------------------------------------------------------ 7–9: progressions

fn brute_quadruples(g: &FiniteAbelianGroup, a: &[usize]) -> Vec<u64> {
    let mut out = vec![0u64; g.size()];
    for &p in a {
        for &q in a {
            for &r in a {
                for &s in a {
                    out[sub(g, add(g, p, q), add(g, r, s))] += 1;
                }
            }
        }
    }
    out
}

fn c7_quadruples() -> Outcome {
    let mut rng = rng(7);
    let mut popular_elems = 0;
    for i in 0..1000 {
        let g = group(&mut rng, 64, 2);
        let size = rng.random_range(1..=g.size().min(16));
        let a: Vec<usize> = rand::seq::index::sample(&mut rng, g.size(), size).into_vec();
        let set = GroupSubset::from_indices(&g, a.iter().copied());
        let brute = brute_quadruples(&g, &a);
        if quadruple_counts(&set) != brute {
            return Err(format!("case {i}: convolution count differs from brute force"));
        }
        if i % 5 == 0 {
            let mut sums = HashSet::new();
            for &p in &a {
                for &q in &a {
                    sums.insert(add(&g, p, q));
                }
            }
            let k = sums.len() as f64 / a.len() as f64;
            let pp = popular_difference_progression(&set, k).map_err(|e| e.to_string())?;
            let threshold = (a.len() as f64).powi(3) / (64.0 * k);
            for x in pp.progression.enumerate().indices() {
                popular_elems += 1;
                if (brute[x] as f64) < threshold {
                    return Err(format!("case {i}: element {x} has {} < {threshold} quadruples", brute[x]));
                }
            }
        }
    }
    Ok(format!("1000 cases exact, {popular_elems} popular elements above threshold"))
}

fn c8_projectivity() -> Outcome {
    let mut rng = rng(8);
    let mut done = 0;
    while done < 50 {
        let g = group(&mut rng, 64, 2);
        let h = group(&mut rng, 64, 2);
        // K generated by one or two random elements, kept small.
        let gens: Vec<usize> = (0..rng.random_range(1..=2)).map(|_| rng.random_range(0..h.size())).collect();
        let kernel = span(&h, &gens, h.size() as u64);
        let ksize = count(&kernel);
        if ksize > 8 {
            continue;
        }
        let images: Vec<usize> = g
            .moduli()
            .iter()
            .map(|&q| {
                let ok: Vec<usize> = (0..h.size()).filter(|&y| kernel[scale(&h, y, q as i64)]).collect();
                *ok.choose(&mut rng).unwrap()
            })
            .collect();
        let k_set = GroupSubset::from_indices(&h, (0..h.size()).filter(|&y| kernel[y]));
        let phi = QuotientHom::new(&g, &h, k_set, images.iter().map(|&y| h.element_at(y)).collect()).map_err(|e| e.to_string())?;
        let pp = partial_projectivity(&phi, 2).map_err(|e| format!("instance {done}: {e}"))?;
        done += 1;
        let c: Vec<usize> = pp.progression.enumerate().indices().collect();
        let rank = pp.progression.rank();
        if (1usize << rank) > ksize {
            return Err(format!("rank {rank} above log₂|K| for |K| = {ksize}"));
        }
        if c.len() * ksize < g.size() {
            return Err(format!("|C| = {} below |G|/|K|", c.len()));
        }
        let lift = |x: usize| {
            coords(&g, x).iter().zip(&images).fold(0, |acc, (&cx, &img)| add(&h, acc, scale(&h, img, cx as i64)))
        };
        let psi = |x: usize| pp.map.get(x).expect("C is the domain of ψ");
        if c.iter().any(|&x| !kernel[sub(&h, psi(x), lift(x))]) {
            return Err("φ(x) ≠ ψ(x) + K somewhere on C".into());
        }
        let in_c: HashSet<usize> = c.iter().copied().collect();
        for &p in &c {
            for &q in &c {
                for &r in &c {
                    let s = sub(&g, add(&g, p, q), r);
                    if in_c.contains(&s) && add(&h, psi(p), psi(q)) != add(&h, psi(r), psi(s)) {
                        return Err("ψ breaks an additive quadruple".into());
                    }
                }
            }
        }
    }
    Ok("50 instances: rank, size, lift and Freiman 2-homomorphism clauses hold".into())
}

fn brute_is_basis(g: &FiniteAbelianGroup, basis: &[usize]) -> bool {
    let orders: Vec<i64> = basis.iter().map(|&x| (1..=g.size() as i64).find(|&k| scale(g, x, k) == 0).unwrap()).collect();
    if orders.iter().product::<i64>() != g.size() as i64 {
        return false;
    }
    let mut seen = vec![false; g.size()];
    let mut lambda = vec![0i64; basis.len()];
    loop {
        let s = lambda.iter().zip(basis).fold(0, |acc, (&l, &x)| add(g, acc, scale(g, x, l)));
        if std::mem::replace(&mut seen[s], true) {
            return false;
        }
        let mut i = 0;
        while i < lambda.len() && lambda[i] + 1 == orders[i] {
            lambda[i] = 0;
            i += 1;
        }
        if i == lambda.len() {
            return true;
        }
        lambda[i] += 1;
    }
}

fn c9_extraction_and_moves() -> Outcome {
    let mut rng = rng(9);
    let mut done = 0;
    while done < 100 {
        let g = group(&mut rng, 400, 2);
        let rank = rng.random_range(0..=2);
        let arms: Vec<(GroupElement, i64)> =
            (0..rank).map(|_| (g.element_at(rng.random_range(0..g.size())), rng.random_range(1..=12))).collect();
        let sub_gen = rng.random_range(0..g.size());
        let h_sub = if rng.random_bool(0.5) { span(&g, &[sub_gen], g.size() as u64) } else { (0..g.size()).map(|x| x == 0).collect() };
        let h_set = GroupSubset::from_indices(&g, (0..g.size()).filter(|&x| h_sub[x]));
        let Ok(c) = CosetProgression::symmetric(&g, arms, h_set.clone()) else { continue };
        if !c.is_proper() {
            continue;
        }
        done += 1;
        let s = span(&g, &[rng.random_range(0..g.size())], g.size() as u64);
        let c_set = from_subset(&c.enumerate());
        let a: Vec<bool> = c_set.iter().zip(&s).map(|(&x, &y)| x && y).collect();
        let alpha = count(&a) as f64 / count(&c_set) as f64;
        let ex = extract_subprogression(&GroupSubset::from_indices(&g, (0..g.size()).filter(|&x| a[x])), &c, alpha)
            .map_err(|e| e.to_string())?;
        if !subset_of(&from_subset(&ex.progression.enumerate()), &a) {
            return Err("extracted progression leaves A".into());
        }
        for ((arm, &l), &m) in c.arms().iter().zip(&ex.steps).zip(&ex.lengths) {
            if l == 0 || l as f64 > 20.0 / alpha + 1e-9 || m != arm.hi / l as i64 {
                return Err(format!("arm clause fails: ℓ = {l}, M = {m}, N = {}", arm.hi));
            }
        }
        let h_prime: Vec<bool> = a.iter().zip(&h_sub).map(|(&x, &y)| x && y).collect();
        if from_subset(ex.progression.subgroup()) != h_prime || (count(&h_prime) as f64) < alpha * count(&h_sub) as f64 - 1e-9 {
            return Err("H' clause fails".into());
        }
    }
    let mut moves = 0;
    while moves < 1000 {
        let g = group(&mut rng, 1024, 3);
        let inv = invariant_factors(&g);
        let r = inv.basis.len();
        if r == 0 {
            continue;
        }
        let mut basis = inv.basis.clone();
        for _ in 0..25 {
            let mv = match rng.random_range(0..3) {
                0 if r > 1 => {
                    let i = rng.random_range(0..r - 1);
                    BasisMove::Upper { i, j: rng.random_range(i + 1..r), lambda: rng.random_range(-4..=4) }
                }
                1 if r > 1 => {
                    let j = rng.random_range(0..r - 1);
                    BasisMove::Lower { i: rng.random_range(j + 1..r), j, lambda: rng.random_range(-4..=4) }
                }
                _ => {
                    let i = rng.random_range(0..r);
                    let n = inv.orders[i] as i64;
                    let lambda = (1..=2 * n + 1).filter(|&l| num_integer::gcd(l, n) == 1).collect::<Vec<_>>();
                    BasisMove::Scale { i, lambda: *lambda.choose(&mut rng).unwrap() }
                }
            };
            basis = change_basis(&g, &basis, mv).map_err(|e| format!("move {mv:?}: {e}"))?;
            moves += 1;
            let idx: Vec<usize> = basis.iter().map(|x| g.index_of(x)).collect();
            let orders: Vec<u64> = basis.iter().map(|x| g.order_of(x)).collect();
            if !brute_is_basis(&g, &idx) || orders != inv.orders {
                return Err(format!("move {mv:?} broke the basis"));
            }
        }
    }
    Ok(format!("100 extractions meet every clause, {moves} basis moves keep basis and orders"))
}

// ------------------------------------------------------------ 10: regularity

fn c10_regularity() -> Outcome {
    let mut rng = rng(10);
    let eta = Rational64::new(1, 4);
    let rho = Rational64::new(1, 4);
    let (mut cells, mut certified, mut steps) = (0, 0, 0);
    for t in 0..20 {
        let g = group(&mut rng, 256, 2);
        let q = rng.random_range(2..=256);
        let h = make_group(&[q]).unwrap();
        let n = rng.random_range(0..=(q - 1) / 2);
        let c = CosetProgression::symmetric(&h, vec![(h.unit(0), n)], GroupSubset::singleton(&h, 0)).unwrap();
        let gamma: Vec<Character> = (0..rng.random_range(0..=1)).map(|_| to_char(&random_char(&mut rng, &g))).collect();
        let r = rng.random_range(1..=2);
        let dual = g.dual();
        let maps: Vec<FreimanLinearMap> = (0..r)
            .map(|_| {
                let ok: Vec<usize> = (0..dual.size()).filter(|&x| scale(&dual, x, q) == 0).collect();
                let chi = coords(&dual, *ok.choose(&mut rng).unwrap());
                FreimanLinearMap::from_unit_images(&h, &g, &[to_char(&chi)]).unwrap()
            })
            .collect();
        let cfg = RegularityConfig { seed: 100 + t, ..RegularityConfig::default() };
        let part = regularity_partition(&g, &c, &gamma, &maps, rho, eta, &cfg).map_err(|e| e.to_string())?;
        let c_set = from_subset(&c.enumerate());
        let mut cover = vec![0u32; h.size()];
        for cell in &part.cells {
            cells += 1;
            for y in cell.points.indices() {
                cover[y] += 1;
            }
            if from_subset(&cell.progression.enumerate()) != from_subset(&cell.points) {
                return Err(format!("instance {t}: cell progression does not enumerate its points"));
            }
            if cell.rho < rho / 2 || cell.rho > rho {
                return Err(format!("instance {t}: radius {} outside [ρ/2, ρ]", cell.rho));
            }
            if cell.certified {
                certified += 1;
                let chk = qr_property_check(&g, &cell.points, &gamma, &maps, cell.rho, eta, cell.seed).map_err(|e| e.to_string())?;
                if !chk.passes() {
                    return Err(format!("instance {t}: certified cell fails the check from scratch"));
                }
            }
        }
        if (0..h.size()).any(|y| cover[y] != c_set[y] as u32) {
            return Err(format!("instance {t}: cells do not partition C"));
        }
        if part.steps > budget(r, cfg.coefficient_bound) {
            return Err(format!("instance {t}: {} steps above budget", part.steps));
        }
        steps += part.steps;
    }
    Ok(format!("20 instances, {cells} cells, {certified} certified and re-passed, {steps} relation steps"))
}

// ------------------------------------------------------------ 11: quasirandom

/// `E f(x0,y0) f(x1,y0) f(x0,y1) f(x1,y1)` by the fourfold sum.
fn box_fourth(f: &[f64], nx: usize, ny: usize) -> f64 {
    let mut s = 0.0;
    for x0 in 0..nx {
        for x1 in 0..nx {
            for y0 in 0..ny {
                for y1 in 0..ny {
                    s += f[x0 * ny + y0] * f[x1 * ny + y0] * f[x0 * ny + y1] * f[x1 * ny + y1];
                }
            }
        }
    }
    s / (nx * nx * ny * ny) as f64
}

fn c11_quasirandom() -> Outcome {
    let mut rng = rng(11);
    for t in 0..1000 {
        let (nx, ny) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let f: Vec<f64> = (0..nx * ny).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let u: Vec<f64> = (0..nx).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let v: Vec<f64> = (0..ny).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let mut lhs = 0.0;
        for x in 0..nx {
            for y in 0..ny {
                lhs += f[x * ny + y] * u[x] * v[y];
            }
        }
        lhs = (lhs / (nx * ny) as f64).abs();
        let l2 = |w: &[f64]| (w.iter().map(|a| a * a).sum::<f64>() / w.len() as f64).sqrt();
        let rhs = box_fourth(&f, nx, ny).max(0.0).powf(0.25) * l2(&u) * l2(&v);
        let lib = correlation_bound_check(&f, &u, &v).map_err(|e| e.to_string())?;
        if lhs > rhs + 1e-9 || !lib.holds {
            return Err(format!("triple {t}: {lhs} > {rhs}"));
        }
    }
    let mut checks = 0;
    for mask in 0u32..1 << 16 {
        let edge = |x: usize, y: usize| mask >> (4 * x + y) & 1 == 1;
        let graph = BipartiteGraph::from_fn(4, 4, edge);
        let deg: Vec<usize> = (0..4).map(|x| (0..4).filter(|&y| edge(x, y)).count()).collect();
        let density = deg.iter().sum::<usize>() as f64 / 16.0;
        let f: Vec<f64> = (0..16).map(|i| edge(i / 4, i % 4) as u8 as f64 - density).collect();
        let norm = box_fourth(&f, 4, 4).max(0.0).powf(0.25);
        for delta in [0.0, 0.25, 0.5, 0.75, 1.0, density] {
            let d1 = deg.iter().map(|&d| (d as f64 - 4.0 * delta).abs()).sum::<f64>() / 16.0;
            let mut d2 = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    let co = (0..4).filter(|&y| edge(a, y) && edge(b, y)).count() as f64;
                    d2 += (co - delta * delta * 4.0).abs();
                }
            }
            let eps = d1.max(d2 / 64.0);
            checks += 1;
            if (delta - density).abs() > eps + 1e-9 || norm > 3.0 * eps.powf(0.125) + 1e-9 {
                return Err(format!("graph {mask:#06x}, δ = {delta}: conclusion fails"));
            }
            let lib = one_sided_qr(&graph, delta, eps).map_err(|e| e.to_string())?;
            if !lib.hypotheses_hold || !lib.holds {
                return Err(format!("graph {mask:#06x}, δ = {delta}: library disagrees"));
            }
        }
    }
    let single: Vec<f64> = [0.75, -0.25, -0.25, -0.25].to_vec();
    let n = box_fourth(&single, 2, 2).powf(0.25);
    let lib = box_norm(&single, 2, 2).map_err(|e| e.to_string())?;
    let want = (7.0f64 / 256.0).powf(0.25);
    if (n - want).abs() > 1e-9 || (lib - want).abs() > 1e-9 {
        return Err(format!("single edge box norm {lib} vs {want}"));
    }
    Ok(format!("1000 triples, {checks} graph/δ pairs on 4×4 classes, single edge {lib:.12}"))
}

// ------------------------------------------------------------ 12: main theorem

fn brute_hor(a: &BiSet) -> BiSet {
    let (g, h) = (a.g(), a.h());
    let mut out = BiSet::empty(g, h);
    for y in 0..h.size() {
        let row: Vec<usize> = (0..g.size()).filter(|&x| a.contains(x, y)).collect();
        for &p in &row {
            for &q in &row {
                out.insert(g.sub_idx(p, q), y);
            }
        }
    }
    out
}

fn brute_ver(a: &BiSet) -> BiSet {
    let (g, h) = (a.g(), a.h());
    let mut out = BiSet::empty(g, h);
    for x in 0..g.size() {
        let col: Vec<usize> = (0..h.size()).filter(|&y| a.contains(x, y)).collect();
        for &p in &col {
            for &q in &col {
                out.insert(x, h.sub_idx(p, q));
            }
        }
    }
    out
}

fn c12_main_theorem() -> Outcome {
    let start = Instant::now();
    let groups: [&[i64]; 6] = [&[16], &[4, 4], &[2, 2, 2, 2], &[64], &[8, 8], &[256]];
    let mut runs = 0;
    let mut smallest = usize::MAX;
    for moduli in groups {
        for delta in [0.05, 0.1, 0.3] {
            for seed in 0..10u64 {
                let rep = main_theorem_experiment(&ExperimentConfig::new(moduli, moduli, delta, 1000 + seed))
                    .map_err(|e| e.to_string())?;
                runs += 1;
                let tag = format!("{moduli:?} δ = {delta} seed {}", 1000 + seed);
                let mut d = rep.a.clone();
                for op in rep.word.chars().rev() {
                    d = if op == 'h' { brute_hor(&d) } else { brute_ver(&d) };
                }
                if d != rep.d {
                    return Err(format!("{tag}: iterated difference set differs from the double loop"));
                }
                let v = &rep.variety;
                let (g, h) = (v.g(), v.h());
                let c = from_subset(&v.progression().enumerate());
                let mut size = 0;
                let mut inside = true;
                for y in (0..h.size()).filter(|&y| c[y]) {
                    let mut freqs: Vec<Vec<u64>> = v.gamma().iter().map(|c| c.0.clone()).collect();
                    freqs.extend(v.maps().iter().map(|m| m.value(y).unwrap().0));
                    for x in 0..g.size() {
                        if freqs.iter().all(|f| within(g, f, x, v.rho())) {
                            size += 1;
                            inside &= d.contains(x, y);
                        }
                    }
                }
                if !inside || !variety_contained_in(v, &d) || !rep.verified || size != rep.variety_size {
                    return Err(format!("{tag}: containment disagrees (oracle {inside}, size {size} vs {})", rep.variety_size));
                }
                if d.len() > 1 && size <= 1 {
                    return Err(format!("{tag}: trivial variety although |D| = {}", d.len()));
                }
                smallest = smallest.min(size);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 600.0 {
        return Err(format!("took {secs:.0}s"));
    }
    Ok(format!("{runs} runs verified and nontrivial, smallest variety {smallest}, {secs:.1}s"))
}

// ------------------------------------------------------------ 13: determinism

fn c13_determinism() -> Outcome {
    let cfg = SuiteConfig { seed: 1, ..SuiteConfig::default() };
    let first = run_suite("all", &cfg).map_err(|e| e.to_string())?;
    let second = run_suite("all", &cfg).map_err(|e| e.to_string())?;
    let a = serde_json::to_value(first.without_timing()).unwrap();
    let b = serde_json::to_value(second.without_timing()).unwrap();
    if a != b {
        return Err("two runs of the `all` suite differ".into());
    }
    let failing: Vec<&str> = first.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    Ok(format!("{} checks identical across runs; failing checks: {failing:?}", first.checks.len()))
}

fn main() {
    let regular = regular_instances();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("Bohr size bounds", Box::new(c1_size_bounds)),
        ("size formula on weakly regular Bohr sets", Box::new(|| c2_size_formula(&regular))),
        ("large spectrum certified", Box::new(|| c3_large_spectrum(&regular))),
        ("Bohr sum containment with R = 0 control", Box::new(c4_bohr_sum)),
        ("dense subsets cover B(ρ/2) by differences", Box::new(c5_dense_difference)),
        ("quantitative spanning and bounded representations", Box::new(c6_span_cover)),
        ("quadruple counts and popular differences", Box::new(c7_quadruples)),
        ("partial projectivity", Box::new(c8_projectivity)),
        ("subprogression extraction and basis moves", Box::new(c9_extraction_and_moves)),
        ("regularity partition re-certifies", Box::new(c10_regularity)),
        ("quasirandomness inequalities", Box::new(c11_quasirandom)),
        ("main theorem smoke batch", Box::new(c12_main_theorem)),
        ("suite determinism", Box::new(c13_determinism)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = run();
        let secs = t.elapsed().as_secs_f64();
        match out {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
