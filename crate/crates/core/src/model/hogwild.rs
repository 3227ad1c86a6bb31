use std::marker::PhantomData;

use super::{Bank, EmbeddingMatrices, ParamRows};

/// Lock-free shared view of the embedding banks for Hogwild training.
///
/// Workers read and write rows without synchronization. Updates are sparse (a
/// handful of rows per tuple out of tens of thousands), so concurrent writes to
/// the same row are rare and only perturb that row slightly; the epoch-boundary
/// renormalization repairs any norm drift they cause.
#[derive(Clone, Copy)]
pub(crate) struct SharedParams<'a> {
    banks: [(*mut f32, usize); 3],
    dim: usize,
    _borrow: PhantomData<&'a mut EmbeddingMatrices>,
}

// SAFETY: the pointers stay valid for `'a` because the matrices are mutably
// borrowed for that long. Concurrent unsynchronized row access is the intended
// Hogwild behavior.
unsafe impl Send for SharedParams<'_> {}
unsafe impl Sync for SharedParams<'_> {}

impl<'a> SharedParams<'a> {
    pub(crate) fn new(params: &'a mut EmbeddingMatrices) -> Self {
        let dim = params.dim();
        let bank = |m: &mut super::Matrix| (m.as_mut_slice().as_mut_ptr(), m.rows());
        let banks = [
            bank(&mut params.target),
            bank(&mut params.context),
            bank(&mut params.paragraph),
        ];
        SharedParams {
            banks,
            dim,
            _borrow: PhantomData,
        }
    }

    #[inline]
    fn row_ptr(&self, bank: Bank, idx: usize) -> *mut f32 {
        let (ptr, rows) = self.banks[bank as usize];
        assert!(
            idx < rows,
            "row {idx} out of bounds for {bank:?} bank of {rows} rows"
        );
        // SAFETY: idx < rows, so the row lies inside the allocation.
        unsafe { ptr.add(idx * self.dim) }
    }
}

impl ParamRows for SharedParams<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn read(&self, bank: Bank, idx: usize, out: &mut [f32]) {
        let src = self.row_ptr(bank, idx);
        // SAFETY: `src` points at `dim` valid floats; `out` is a private buffer.
        unsafe { std::ptr::copy_nonoverlapping(src, out.as_mut_ptr(), self.dim) }
    }

    #[inline]
    fn update(&mut self, bank: Bank, idx: usize, f: impl FnOnce(&mut [f32])) {
        let ptr = self.row_ptr(bank, idx);
        // SAFETY: the row is in bounds. Other workers may touch the same row
        // concurrently; that race is accepted (see the type docs).
        let row = unsafe { std::slice::from_raw_parts_mut(ptr, self.dim) };
        f(row)
    }
}
