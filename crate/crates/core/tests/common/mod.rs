//! Register-level systolic array simulator, the oracle for the analytical
//! baseline latencies. Every fold is zero-padded to the full array and run
//! cycle by cycle; operands hop one PE per cycle.
#![allow(dead_code)]

pub mod equiv;
pub mod props;

pub type Matrix = Vec<Vec<i64>>;

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| (0..n).map(|j| row.iter().zip(b).map(|(x, br)| x * br[j]).sum()).collect())
        .collect()
}

pub fn transpose(a: &Matrix, cols: usize) -> Matrix {
    (0..cols).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

fn block(a: &Matrix, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Matrix {
    a[rows].iter().map(|r| r[cols.clone()].to_vec()).collect()
}

/// Output stationary: `a` is `rows x k` with `rows <= sr`, `b` is `k x cols`
/// with `cols <= sc`. Row `r` of `a` enters the left edge skewed by `r`
/// cycles, column `c` of `b` enters the top skewed by `c`; every PE
/// multiplies what it holds and keeps its sum. Afterwards the sums shift out
/// of the bottom row, one array row per cycle.
pub fn os_fold(a: &Matrix, b: &Matrix, sr: usize, sc: usize) -> (Matrix, u64) {
    let k = b.len();
    let at = |r: usize, i: usize| a.get(r).map_or(0, |row| row[i]);
    let bt = |i: usize, c: usize| b[i].get(c).copied().unwrap_or(0);
    let mut a_reg: Vec<Vec<Option<i64>>> = vec![vec![None; sc]; sr];
    let mut b_reg = a_reg.clone();
    let mut acc = vec![vec![0i64; sc]; sr];
    let mut t = 0usize;
    let mut busy = 0u64;
    loop {
        let mut a_new = vec![vec![None; sc]; sr];
        let mut b_new = vec![vec![None; sc]; sr];
        let mut any = false;
        for r in 0..sr {
            for c in 0..sc {
                a_new[r][c] = if c == 0 {
                    (t >= r && t - r < k).then(|| at(r, t - r))
                } else {
                    a_reg[r][c - 1]
                };
                b_new[r][c] = if r == 0 {
                    (t >= c && t - c < k).then(|| bt(t - c, c))
                } else {
                    b_reg[r - 1][c]
                };
                if let (Some(x), Some(y)) = (a_new[r][c], b_new[r][c]) {
                    acc[r][c] += x * y;
                }
                any |= a_new[r][c].is_some() || b_new[r][c].is_some();
            }
        }
        a_reg = a_new;
        b_reg = b_new;
        if !any && t >= k + sr + sc {
            break;
        }
        if any {
            busy = t as u64 + 1;
        }
        t += 1;
    }
    // drain
    let mut out = vec![vec![0i64; sc]; sr];
    for d in 0..sr {
        out[sr - 1 - d] = acc[sr - 1].clone();
        for r in (1..sr).rev() {
            acc[r] = acc[r - 1].clone();
        }
        acc[0] = vec![0; sc];
    }
    let rows = a.len();
    let cols = b.first().map_or(0, |r| r.len());
    (block(&out, 0..rows, 0..cols), busy + sr as u64)
}

/// Stationary engine shared by weight and input stationarity. `stat` is
/// `kr x cc` (`kr <= sr`, `cc <= sc`) and is shifted in from the top, one
/// row per cycle. Vector `m` of `stream` (each of length `kr`) enters row `r`
/// at cycle `m + r` and moves right; partial sums move down and leave the
/// bottom row. Returns the `len(stream) x cc` product and its cycles.
pub fn stationary_fold(stat: &Matrix, stream: &Matrix, sr: usize, sc: usize) -> (Matrix, u64) {
    let l = stream.len();
    let st = |r: usize, c: usize| stat.get(r).and_then(|row| row.get(c)).copied().unwrap_or(0);
    let mut w = vec![vec![0i64; sc]; sr];
    let mut cycles = 0u64;
    for step in 0..sr {
        for r in (1..sr).rev() {
            w[r] = w[r - 1].clone();
        }
        w[0] = (0..sc).map(|c| st(sr - 1 - step, c)).collect();
        cycles += 1;
    }
    let xin = |m: usize, r: usize| stream[m].get(r).copied().unwrap_or(0);
    let mut x_reg: Vec<Vec<Option<(usize, i64)>>> = vec![vec![None; sc]; sr];
    let mut p_reg: Vec<Vec<Option<(usize, i64)>>> = vec![vec![None; sc]; sr];
    let mut out = vec![vec![0i64; sc]; l];
    let mut emitted = 0usize;
    let mut t = 0usize;
    while emitted < l * sc {
        let mut x_new = vec![vec![None; sc]; sr];
        let mut p_new = vec![vec![None; sc]; sr];
        for r in 0..sr {
            for c in 0..sc {
                x_new[r][c] = if c == 0 {
                    (t >= r && t - r < l).then(|| (t - r, xin(t - r, r)))
                } else {
                    x_reg[r][c - 1]
                };
                let p_in = if r == 0 { x_new[r][c].map(|(m, _)| (m, 0)) } else { p_reg[r - 1][c] };
                p_new[r][c] = match (p_in, x_new[r][c]) {
                    (Some((pm, p)), Some((xm, x))) => {
                        assert_eq!(pm, xm, "operands out of step at PE ({r}, {c})");
                        Some((pm, p + x * w[r][c]))
                    }
                    (None, None) => None,
                    _ => panic!("operand without partner at PE ({r}, {c}), cycle {t}"),
                };
            }
        }
        for c in 0..sc {
            if let Some((m, p)) = p_new[sr - 1][c] {
                out[m][c] = p;
                emitted += 1;
            }
        }
        x_reg = x_new;
        p_reg = p_new;
        t += 1;
        assert!(t < 1 << 20, "stationary fold does not terminate");
    }
    let cols = stat.first().map_or(0, |r| r.len());
    (block(&out, 0..l, 0..cols), cycles + t as u64)
}

pub struct SimRun {
    pub out: Matrix,
    pub cycles: u64,
}

fn chunks(n: usize, size: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    (0..n).step_by(size).map(move |s| s..(s + size).min(n))
}

/// `x` is `m x k` (timesteps by inputs), `w` is `k x n`.
pub fn simulate_os(x: &Matrix, w: &Matrix, sr: usize, sc: usize) -> SimRun {
    let (m, n) = (x.len(), w[0].len());
    let mut out = vec![vec![0i64; n]; m];
    let mut cycles = 0;
    for rows in chunks(m, sr) {
        for cols in chunks(n, sc) {
            let (part, c) = os_fold(&x[rows.clone()].to_vec(), &block(w, 0..w.len(), cols.clone()), sr, sc);
            cycles += c;
            for (i, r) in rows.clone().enumerate() {
                for (j, col) in cols.clone().enumerate() {
                    out[r][col] = part[i][j];
                }
            }
        }
    }
    SimRun { out, cycles }
}

pub fn simulate_ws(x: &Matrix, w: &Matrix, sr: usize, sc: usize) -> SimRun {
    let (m, k, n) = (x.len(), w.len(), w[0].len());
    let mut out = vec![vec![0i64; n]; m];
    let mut cycles = 0;
    for ks in chunks(k, sr) {
        for ns in chunks(n, sc) {
            let stat = block(w, ks.clone(), ns.clone());
            let stream = block(x, 0..m, ks.clone());
            let (part, c) = stationary_fold(&stat, &stream, sr, sc);
            cycles += c;
            for (i, row) in part.iter().enumerate() {
                for (j, col) in ns.clone().enumerate() {
                    out[i][col] += row[j];
                }
            }
        }
    }
    SimRun { out, cycles }
}

pub fn simulate_is(x: &Matrix, w: &Matrix, sr: usize, sc: usize) -> SimRun {
    let (m, k, n) = (x.len(), w.len(), w[0].len());
    let xt = transpose(x, k);
    let wt = transpose(w, n);
    let mut out = vec![vec![0i64; n]; m];
    let mut cycles = 0;
    for ks in chunks(k, sr) {
        for ms in chunks(m, sc) {
            let stat = block(&xt, ks.clone(), ms.clone());
            let stream = block(&wt, 0..n, ks.clone());
            let (part, c) = stationary_fold(&stat, &stream, sr, sc);
            cycles += c;
            for (j, row) in part.iter().enumerate() {
                for (i, mi) in ms.clone().enumerate() {
                    out[mi][j] += row[i];
                }
            }
        }
    }
    SimRun { out, cycles }
}

/// Deterministic operands: binary spikes and small signed weights.
pub fn operands(m: usize, k: usize, n: usize, salt: u64) -> (Matrix, Matrix) {
    let mut s = salt.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        s
    };
    let x = (0..m).map(|_| (0..k).map(|_| (next() & 1) as i64).collect()).collect();
    let w = (0..k).map(|_| (0..n).map(|_| (next() % 15) as i64 - 7).collect()).collect();
    (x, w)
}

/// Compare the analytical baseline latencies against the simulator for
/// every `k, n <= max` and each `m` on every geometry. Returns the number of
/// (style, shape, geometry) cases checked.
pub fn check_baselines(geoms: &[(usize, usize)], ms: &[usize], max: usize) -> Result<usize, String> {
    use metaspike::dataflow::{latency_baseline, ArrayGeometry, Style, WorkloadShape};
    let mut checked = 0;
    for &(sr, sc) in geoms {
        let g = ArrayGeometry { rows: sr, cols: sc };
        for &m in ms {
            for k in 1..=max {
                for n in 1..=max {
                    let (x, w) = operands(m, k, n, (m * 1000 + k * 40 + n) as u64);
                    let want = matmul(&x, &w);
                    let shape = WorkloadShape { n_in: k, n_out: n, sparsity: 0.0, timesteps: m };
                    for (style, sim) in [
                        (Style::Os, simulate_os(&x, &w, sr, sc)),
                        (Style::Ws, simulate_ws(&x, &w, sr, sc)),
                        (Style::Is, simulate_is(&x, &w, sr, sc)),
                    ] {
                        let at = format!("{style:?} {sr}x{sc} m={m} k={k} n={n}");
                        if sim.out != want {
                            return Err(format!("{at}: simulator computed a wrong product"));
                        }
                        let model = latency_baseline(style, &g, &shape).map_err(|e| e.to_string())?;
                        if model != sim.cycles {
                            return Err(format!("{at}: model {model} cycles, simulator {}", sim.cycles));
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok(checked)
}
