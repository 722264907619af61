//! Straight-loop f64 reference for the matching head, written independently
//! of the tape: explicit index loops, no shared helpers with the library.
#![allow(dead_code)]

use cobert::matcher::{AblationConfig, Interaction, Pooling};

pub type Rows = Vec<Vec<f64>>;

pub struct Seq {
    pub rows: Rows,
    pub valid: Vec<bool>,
}

fn softmax_valid(logits: &[f64], valid: &[bool]) -> Vec<f64> {
    let mut max = f64::NEG_INFINITY;
    for j in 0..logits.len() {
        if valid[j] && logits[j] > max {
            max = logits[j];
        }
    }
    let mut out = vec![0.0; logits.len()];
    let mut total = 0.0;
    for j in 0..logits.len() {
        if valid[j] {
            out[j] = (logits[j] - max).exp();
            total += out[j];
        }
    }
    for v in &mut out {
        *v /= total;
    }
    out
}

pub struct Attn {
    pub affinity: Rows,
    pub x2y: Rows,
    pub y2x: Rows,
}

pub fn attention(x: &Seq, y: &Seq) -> Attn {
    let (m, n) = (x.rows.len(), y.rows.len());
    let mut affinity = vec![vec![0.0; n]; m];
    for i in 0..m {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..x.rows[i].len() {
                s += x.rows[i][k] * y.rows[j][k];
            }
            affinity[i][j] = s;
        }
    }
    let x2y = (0..m).map(|i| softmax_valid(&affinity[i], &y.valid)).collect();
    let y2x = (0..n)
        .map(|j| {
            let col: Vec<f64> = (0..m).map(|i| affinity[i][j]).collect();
            softmax_valid(&col, &x.valid)
        })
        .collect();
    Attn { affinity, x2y, y2x }
}

fn apply(weights: &Rows, values: &Rows) -> Rows {
    let d = values[0].len();
    weights
        .iter()
        .map(|w| {
            let mut out = vec![0.0; d];
            for (j, wj) in w.iter().enumerate() {
                for k in 0..d {
                    out[k] += wj * values[j][k];
                }
            }
            out
        })
        .collect()
}

fn max_pool(rows: &Rows, valid: &[bool]) -> Vec<f64> {
    let d = rows[0].len();
    let mut out = vec![f64::NEG_INFINITY; d];
    for (i, r) in rows.iter().enumerate() {
        if valid[i] {
            for k in 0..d {
                out[k] = out[k].max(r[k]);
            }
        }
    }
    out
}

fn mean_pool(rows: &Rows, valid: &[bool]) -> Vec<f64> {
    let d = rows[0].len();
    let mut out = vec![0.0; d];
    let mut count = 0.0;
    for (i, r) in rows.iter().enumerate() {
        if valid[i] {
            count += 1.0;
            for k in 0..d {
                out[k] += r[k];
            }
        }
    }
    out.iter().map(|v| v / count).collect()
}

fn pooled(rows: &Rows, valid: &[bool], pooling: Pooling) -> Vec<f64> {
    match pooling {
        Pooling::Max => max_pool(rows, valid),
        Pooling::Mean => mean_pool(rows, valid),
        Pooling::MaxMean => {
            let mut v = max_pool(rows, valid);
            v.extend(mean_pool(rows, valid));
            v
        }
    }
}

pub fn hop1(x: &Seq, y: &Seq, pooling: Pooling) -> (Vec<f64>, Vec<f64>) {
    let a = attention(x, y);
    let x_att = apply(&a.x2y, &y.rows);
    let y_att = apply(&a.y2x, &x.rows);
    (pooled(&x_att, &x.valid, pooling), pooled(&y_att, &y.valid, pooling))
}

fn row_times(v: &[f64], m: &Rows) -> Vec<f64> {
    let cols = m[0].len();
    let mut out = vec![0.0; cols];
    for (i, vi) in v.iter().enumerate() {
        for j in 0..cols {
            out[j] += vi * m[i][j];
        }
    }
    out
}

/// Second-order weights (source over m, target over n).
pub fn hop2_weights(x: &Seq, y: &Seq) -> (Vec<f64>, Vec<f64>) {
    let a = attention(x, y);
    let mean_x2y = mean_pool(&a.x2y, &x.valid);
    let mean_y2x = mean_pool(&a.y2x, &y.valid);
    (row_times(&mean_x2y, &a.y2x), row_times(&mean_y2x, &a.x2y))
}

pub fn hop2(x: &Seq, y: &Seq) -> (Vec<f64>, Vec<f64>) {
    let (wx, wy) = hop2_weights(x, y);
    (row_times(&wx, &x.rows), row_times(&wy, &y.rows))
}

pub fn hop3(x: &Seq, y: &Seq) -> (Vec<f64>, Vec<f64>) {
    let a = attention(x, y);
    let (wx, wy) = hop2_weights(x, y);
    let wx3 = row_times(&wy, &a.y2x);
    let wy3 = row_times(&wx, &a.x2y);
    (row_times(&wx3, &x.rows), row_times(&wy3, &y.rows))
}

fn pair(x: &Seq, y: &Seq, config: &AblationConfig) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut parts = Vec::new();
    if config.use_hop1 {
        parts.push(hop1(x, y, config.pooling));
    }
    if config.use_hop2 {
        parts.push(hop2(x, y));
    }
    if config.use_hop3 {
        parts.push(hop3(x, y));
    }
    parts
}

/// `(X_f, Y_f)`.
pub fn fuse(context: &Seq, persona: Option<&Seq>, response: &Seq, config: &AblationConfig) -> (Vec<f64>, Vec<f64>) {
    if config.interaction == Interaction::None {
        let c = mean_pool(&context.rows, &context.valid);
        let x = match persona {
            Some(p) => {
                let pm = mean_pool(&p.rows, &p.valid);
                c.iter().zip(&pm).map(|(a, b)| (a + b) / 2.0).collect()
            }
            None => c,
        };
        return (x, mean_pool(&response.rows, &response.valid));
    }
    let ctx = pair(context, response, config);
    let per = match persona {
        Some(p) => pair(p, response, config),
        None => ctx.iter().map(|(a, b)| (vec![0.0; a.len()], vec![0.0; b.len()])).collect(),
    };
    let mut xf = Vec::new();
    let mut yf = Vec::new();
    for (a, b) in ctx.iter().chain(&per) {
        xf.extend(a);
        yf.extend(b);
    }
    (xf, yf)
}

pub fn score(xf: &[f64], yf: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..xf.len() {
        s += xf[k] * yf[k];
    }
    s
}
