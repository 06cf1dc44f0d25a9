//! Two stacked rotation/flexible-addition layers with shared parameters.
//!
//! Each layer owns one `N_r × d` matrix `M` and one shared d-vector `f`. For
//! relation row `m = M[r]`, the translation interleaves the first halves,
//! `(m₀, f₀, m₁, f₁, …)`, and the rotation pairs the second halves,
//! `(m_{d/2+j}, f_{d/2+j})` for block `j`.

use super::{add_into, slots::rot2l::*, GradSink, Model};
use crate::geometry::{self as geo, buf, Buf};

/// Builds `(translation, rotation pairs)` for one layer from a relation row
/// and the layer's shared vector.
pub fn rot2l_build_layer_params(m_row: &[f64], f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = m_row.len();
    let mut trans = vec![0.0; d];
    let mut rot = vec![0.0; d];
    build_into(m_row, f, &mut trans, &mut rot);
    (trans, rot)
}

fn build_into(m_row: &[f64], f: &[f64], trans: &mut [f64], rot: &mut [f64]) {
    let half = m_row.len() / 2;
    for j in 0..half {
        trans[2 * j] = m_row[j];
        trans[2 * j + 1] = f[j];
        rot[2 * j] = m_row[half + j];
        rot[2 * j + 1] = f[half + j];
    }
}

/// Routes gradients of the constructed layer parameters back to `M[r]` and `f`.
pub fn rot2l_layer_params_backward(gtrans: &[f64], grot: &[f64], gm: &mut [f64], gf: &mut [f64]) {
    let half = gtrans.len() / 2;
    for j in 0..half {
        gm[j] += gtrans[2 * j];
        gf[j] += gtrans[2 * j + 1];
        gm[half + j] += grot[2 * j];
        gf[half + j] += grot[2 * j + 1];
    }
}

/// Mid-layer activation `tanh(q) + γ h`.
pub fn rot2l_mid(h: &[f64], q: &[f64], gamma: f64) -> Vec<f64> {
    q.iter().zip(h).map(|(q, h)| q.tanh() + gamma * h).collect()
}

pub(super) struct Rot2lForward {
    trans2: Buf,
    rot2: Buf,
    hr2: Buf,
    q2: Buf,
    mid: Buf,
    trans1: Buf,
    rot1: Buf,
    hr1: Buf,
    pub(super) q: Buf,
}

impl Model {
    pub(super) fn rot2l_forward(&self, h: usize, r: usize) -> Rot2lForward {
        let d = self.dim();
        let hv = self.entity_embedding(h);
        let t = &self.tensors;
        let mut f = Rot2lForward {
            trans2: buf(d),
            rot2: buf(d),
            hr2: buf(d),
            q2: buf(d),
            mid: buf(d),
            trans1: buf(d),
            rot1: buf(d),
            hr1: buf(d),
            q: buf(d),
        };
        // inner layer
        build_into(t[M2].row(r), t[F2].row(0), &mut f.trans2, &mut f.rot2);
        geo::givens_rotate_into(&f.rot2, hv, &mut f.hr2);
        geo::flexible_add_into(&f.hr2, &f.trans2, self.alpha(ALPHA2, r), &mut f.q2);
        // mid layer
        if self.config.use_mid {
            let g = self.config.gamma;
            for ((m, q), h) in f.mid.iter_mut().zip(&f.q2).zip(hv) {
                *m = q.tanh() + g * h;
            }
        } else {
            f.mid.copy_from_slice(&f.q2);
        }
        // outer layer
        build_into(t[M1].row(r), t[F1].row(0), &mut f.trans1, &mut f.rot1);
        geo::givens_rotate_into(&f.rot1, &f.mid, &mut f.hr1);
        geo::flexible_add_into(&f.hr1, &f.trans1, self.alpha(ALPHA1, r), &mut f.q);
        f
    }

    pub(super) fn rot2l_backward(
        &self,
        h: usize,
        r: usize,
        gq: &[f64],
        gh: &mut [f64],
        sink: &mut dyn GradSink,
    ) {
        let d = self.dim();
        let hv = self.entity_embedding(h);
        let f = self.rot2l_forward(h, r);

        let mut ghr1 = buf(d);
        let mut gtrans1 = buf(d);
        let mut galpha1 = buf(d);
        geo::flexible_add_backward(
            &f.hr1,
            &f.trans1,
            self.alpha(ALPHA1, r),
            gq,
            &mut ghr1,
            &mut gtrans1,
            self.alpha_grad(&mut galpha1),
        );
        let mut grot1 = buf(d);
        let mut gmid = buf(d);
        geo::givens_rotate_backward(&f.rot1, &f.mid, &ghr1, &mut grot1, &mut gmid);

        let mut gq2 = buf(d);
        if self.config.use_mid {
            let g = self.config.gamma;
            for i in 0..d {
                let th = f.q2[i].tanh();
                gq2[i] = gmid[i] * (1.0 - th * th);
                gh[i] += g * gmid[i];
            }
        } else {
            gq2.copy_from_slice(&gmid);
        }

        let mut ghr2 = buf(d);
        let mut gtrans2 = buf(d);
        let mut galpha2 = buf(d);
        geo::flexible_add_backward(
            &f.hr2,
            &f.trans2,
            self.alpha(ALPHA2, r),
            &gq2,
            &mut ghr2,
            &mut gtrans2,
            self.alpha_grad(&mut galpha2),
        );
        let mut grot2 = buf(d);
        geo::givens_rotate_backward(&f.rot2, hv, &ghr2, &mut grot2, gh);

        let mut gm = buf(d);
        let mut gf = buf(d);
        rot2l_layer_params_backward(&gtrans1, &grot1, &mut gm, &mut gf);
        add_into(sink.row(M1, r), &gm);
        add_into(sink.row(F1, 0), &gf);
        gm.fill(0.0);
        gf.fill(0.0);
        rot2l_layer_params_backward(&gtrans2, &grot2, &mut gm, &mut gf);
        add_into(sink.row(M2, r), &gm);
        add_into(sink.row(F2, 0), &gf);
        self.flush_alpha(ALPHA1, r, &galpha1, sink);
        self.flush_alpha(ALPHA2, r, &galpha2, sink);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_params_follow_index_reading() {
        let (a, b, c, e) = (1.0, 2.0, 3.0, 4.0);
        let (p, q, s, u) = (5.0, 6.0, 7.0, 8.0);
        let (trans, rot) = rot2l_build_layer_params(&[a, b, c, e], &[p, q, s, u]);
        assert_eq!(trans, vec![a, p, b, q]);
        assert_eq!(rot, vec![c, s, e, u]);
    }

    #[test]
    fn symmetric_inputs_give_equal_interleaved_halves() {
        let m = [0.3, -0.2, 0.9, 0.1, 0.5, -0.4];
        let (trans, _) = rot2l_build_layer_params(&m, &m);
        for pair in trans.chunks_exact(2) {
            assert_eq!(pair[0], pair[1]);
        }
    }

    #[test]
    fn shared_vector_change_affects_every_relation_identically() {
        let rows = [[0.1, 0.2, 0.3, 0.4], [-1.0, 2.0, 0.5, 0.0]];
        let f0 = [0.0, 0.0, 0.0, 0.0];
        let f1 = [1.0, -1.0, 2.0, 0.5];
        for m in rows {
            let (t0, r0) = rot2l_build_layer_params(&m, &f0);
            let (t1, r1) = rot2l_build_layer_params(&m, &f1);
            let dt: Vec<f64> = t1.iter().zip(&t0).map(|(a, b)| a - b).collect();
            let dr: Vec<f64> = r1.iter().zip(&r0).map(|(a, b)| a - b).collect();
            assert_eq!(dt, vec![0.0, 1.0, 0.0, -1.0]);
            assert_eq!(dr, vec![0.0, 2.0, 0.0, 0.5]);
        }
    }

    #[test]
    fn mid_examples() {
        assert_eq!(rot2l_mid(&[0.4, -0.3], &[0.0, 0.0], 1.0), vec![0.4, -0.3]);
        let t = rot2l_mid(&[0.0, 0.0], &[0.7, -2.0], 0.3);
        assert_eq!(t, vec![0.7f64.tanh(), (-2.0f64).tanh()]);
        let m = rot2l_mid(&[1.0, 0.0], &[1.0, 1.0], 0.5);
        assert!((m[0] - 1.261594).abs() < 1e-6);
        assert!((m[1] - 0.761594).abs() < 1e-6);
    }
}
