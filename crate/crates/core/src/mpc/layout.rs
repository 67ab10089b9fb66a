//! Index bookkeeping of the pre-allocated decision vector.
//!
//! Block `k` holds the swing placement of step `k` followed by three domain
//! slots in the order OA, FA, UA. Each slot stores the pre-impact state of
//! the domain (sagittal then coronal), its duration, ZMP rates, support
//! weights and the ZMP shift of the edge entering it. The inputs of the
//! domain that is currently executing sit after the last block.

use serde::{Deserialize, Serialize};

use crate::model::DomainId;

pub const STATE_LEN: usize = 6;
pub const SLOT_LEN: usize = STATE_LEN + 1 + 2 + 4 + 2;
pub const BLOCK_LEN: usize = 2 + 3 * SLOT_LEN;
pub const NOW_LEN: usize = 1 + 2 + 2 + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub n_blocks: usize,
}

impl Layout {
    pub fn new(n_preview: usize) -> Self {
        Layout { n_blocks: n_preview + 1 }
    }

    pub fn n_vars(&self) -> usize {
        self.n_blocks * BLOCK_LEN + NOW_LEN
    }

    pub fn n_nodes(&self) -> usize {
        3 * self.n_blocks
    }

    /// Node index of domain `d` in block `k`.
    pub fn node(&self, k: usize, d: DomainId) -> usize {
        3 * k + d.block_index()
    }

    pub fn node_block(&self, node: usize) -> usize {
        node / 3
    }

    pub fn node_domain(&self, node: usize) -> DomainId {
        DomainId::BLOCK_ORDER[node % 3]
    }

    pub fn block(&self, k: usize) -> usize {
        k * BLOCK_LEN
    }

    pub fn u_sw(&self, k: usize, axis: usize) -> usize {
        self.block(k) + axis
    }

    fn slot(&self, node: usize) -> usize {
        self.block(node / 3) + 2 + (node % 3) * SLOT_LEN
    }

    /// `axis` 0 sagittal / 1 coronal, `comp` 0 p / 1 L / 2 p_zmp.
    pub fn state(&self, node: usize, axis: usize, comp: usize) -> usize {
        self.slot(node) + 3 * axis + comp
    }

    pub fn duration(&self, node: usize) -> usize {
        self.slot(node) + STATE_LEN
    }

    pub fn rate(&self, node: usize, axis: usize) -> usize {
        self.slot(node) + STATE_LEN + 1 + axis
    }

    /// `i`: 0 a_foot+, 1 a_step+, 2 a_foot-, 3 a_step-.
    pub fn alpha(&self, node: usize, i: usize) -> usize {
        self.slot(node) + STATE_LEN + 3 + i
    }

    pub fn delta(&self, node: usize, axis: usize) -> usize {
        self.slot(node) + STATE_LEN + 7 + axis
    }

    /// True for the pre-impact state entries of the domain slots.
    pub fn is_state(&self, i: usize) -> bool {
        if i >= self.n_blocks * BLOCK_LEN {
            return false;
        }
        let off = i % BLOCK_LEN;
        off >= 2 && (off - 2) % SLOT_LEN < STATE_LEN
    }

    fn now(&self) -> usize {
        self.n_blocks * BLOCK_LEN
    }

    pub fn t2imp(&self) -> usize {
        self.now()
    }

    pub fn delta_now(&self, axis: usize) -> usize {
        self.now() + 1 + axis
    }

    pub fn rate_now(&self, axis: usize) -> usize {
        self.now() + 3 + axis
    }

    pub fn alpha_now(&self, i: usize) -> usize {
        self.now() + 5 + i
    }
}
