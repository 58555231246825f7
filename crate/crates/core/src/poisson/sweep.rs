//! Axis-by-axis line maps over `N`-D arrays.

use ndarray::{ArrayD, ArrayView3, ArrayViewMut2, ArrayViewMut3, Axis, IxDyn};
use rayon::prelude::*;

use crate::Error;

/// Applies `f(row, input_line, output_line, workspace)` to every 1D line of
/// `data` along `axis`, producing an array whose extent along `axis` is
/// `out_len`. Lines are numbered in row-major order of the remaining axes.
pub fn map_axis<W, I, F>(data: &ArrayD<f64>, axis: usize, out_len: usize, init: I, f: F) -> Result<ArrayD<f64>, Error>
where
    I: Fn() -> W + Sync + Send,
    F: Fn(usize, &[f64], &mut [f64], &mut W) -> Result<(), Error> + Sync + Send,
{
    let mut sweep = Sweep::new(data);
    sweep.apply(axis, out_len, init, f)?;
    Ok(sweep.into_array())
}

/// A chain of axis maps that ping-pongs between two buffers instead of
/// allocating an array per step. The first step reads the source directly.
pub struct Sweep<'a> {
    source: Option<&'a [f64]>,
    shape: Vec<usize>,
    cur: Vec<f64>,
    spare: Vec<f64>,
}

impl<'a> Sweep<'a> {
    pub fn new(data: &'a ArrayD<f64>) -> Self {
        let shape = data.shape().to_vec();
        match data.as_slice() {
            Some(slice) => Self {
                source: Some(slice),
                shape,
                cur: Vec::new(),
                spare: Vec::new(),
            },
            None => Self {
                source: None,
                shape,
                cur: data.iter().copied().collect(),
                spare: Vec::new(),
            },
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// One [`map_axis`] step on the current data.
    pub fn apply<W, I, F>(&mut self, axis: usize, out_len: usize, init: I, f: F) -> Result<(), Error>
    where
        I: Fn() -> W + Sync + Send,
        F: Fn(usize, &[f64], &mut [f64], &mut W) -> Result<(), Error> + Sync + Send,
    {
        let input = match self.source.take() {
            Some(s) => s,
            None => &self.cur[..],
        };
        map_lines(input, &self.shape, axis, out_len, &mut self.spare, init, f)?;
        std::mem::swap(&mut self.cur, &mut self.spare);
        self.shape[axis] = out_len;
        Ok(())
    }

    pub fn into_array(self) -> ArrayD<f64> {
        let data = match self.source {
            Some(s) => s.to_vec(),
            None => self.cur,
        };
        ArrayD::from_shape_vec(IxDyn(&self.shape), data).expect("sweep shape")
    }
}

/// Lines gathered per block when the mapped axis is not the last one.
const BLOCK: usize = 32;

/// Line map from a standard-layout `input` of `shape` into `output`, which is
/// resized as needed. `f` must write every entry of its output line.
fn map_lines<W, I, F>(
    input: &[f64],
    shape: &[usize],
    axis: usize,
    out_len: usize,
    output: &mut Vec<f64>,
    init: I,
    f: F,
) -> Result<(), Error>
where
    I: Fn() -> W + Sync + Send,
    F: Fn(usize, &[f64], &mut [f64], &mut W) -> Result<(), Error> + Sync + Send,
{
    let in_len = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    output.resize(outer * out_len * inner, 0.0);
    if outer * inner == 0 || out_len == 0 {
        return Ok(());
    }
    if in_len == 0 {
        output.fill(0.0);
        return Ok(());
    }

    if inner == 1 {
        return input
            .par_chunks(in_len)
            .zip(output.par_chunks_mut(out_len))
            .enumerate()
            .with_min_len(16)
            .try_for_each_init(&init, |ws, (row, (src, dst))| f(row, src, dst, ws));
    }
    // View both sides as (outer, len, inner) and sweep blocks of adjacent
    // inner columns, so every gather and scatter reads whole row segments.
    let src3 = ArrayView3::from_shape((outer, in_len, inner), input).expect("input shape");
    let mut dst3 = ArrayViewMut3::from_shape((outer, out_len, inner), &mut output[..]).expect("output shape");
    let mut tasks: Vec<(usize, usize, ArrayViewMut2<f64>)> = Vec::with_capacity(outer * inner.div_ceil(BLOCK));
    for (o, mut rest) in dst3.outer_iter_mut().enumerate() {
        let mut i0 = 0;
        while i0 < inner {
            let width = BLOCK.min(inner - i0);
            let (chunk, tail) = rest.split_at(Axis(1), width);
            tasks.push((o, i0, chunk));
            rest = tail;
            i0 += width;
        }
    }
    tasks.into_par_iter().try_for_each_init(
        || (init(), vec![0.0; BLOCK * in_len], vec![0.0; BLOCK * out_len]),
        |(ws, gathered, results), (o, i0, mut chunk)| {
            let width = chunk.shape()[1];
            let plane = src3.index_axis(Axis(0), o);
            let plane = plane.as_slice().expect("standard layout");
            for (j, row) in plane.chunks_exact(inner).enumerate() {
                for (c, &v) in row[i0..i0 + width].iter().enumerate() {
                    gathered[c * in_len + j] = v;
                }
            }
            for c in 0..width {
                f(
                    o * inner + i0 + c,
                    &gathered[c * in_len..(c + 1) * in_len],
                    &mut results[c * out_len..(c + 1) * out_len],
                    ws,
                )?;
            }
            for (j, mut row) in chunk.outer_iter_mut().enumerate() {
                let row = row.as_slice_mut().expect("contiguous block row");
                for (c, v) in row.iter_mut().enumerate() {
                    *v = results[c * out_len + j];
                }
            }
            Ok::<(), Error>(())
        },
    )
}

/// Multi-index (over all axes but `axis`, row-major) of line number `row`.
pub fn line_index(shape: &[usize], axis: usize, mut row: usize, out: &mut [usize]) {
    let others: Vec<usize> = (0..shape.len()).filter(|&a| a != axis).collect();
    for &a in others.iter().rev() {
        out[a] = row % shape[a];
        row /= shape[a];
    }
    out[axis] = 0;
}
