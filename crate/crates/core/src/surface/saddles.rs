use std::fmt::Write as _;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rayon::prelude::*;

use super::model::{add, cross, dot, norm, sub};
use super::triangulate::{triangulate, Triangle};
use super::{ConeAngle, CornerRef, Point, SurfaceError, TranslationSurface};

/// Default cap on propagated wedge records.
pub const RECORD_BUDGET: u64 = 10_000_000;
/// Angular tolerance for identifying the same connection found twice.
pub const DEDUP_TOL: f64 = 1e-9;

const ORIENT_EPS: f64 = 1e-12;
const LENGTH_SLACK: f64 = 1e-12;
const FLUSH_EVERY: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleOptions {
    pub record_budget: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        SaddleOptions {
            record_budget: RECORD_BUDGET,
            threads: None,
        }
    }
}

/// Oriented saddle connection.
#[derive(Debug, Clone, PartialEq)]
pub struct SaddleConnection {
    pub id: usize,
    pub start_class: usize,
    pub end_class: usize,
    /// `(Re, Im)` of the displacement.
    pub holonomy: Point,
    pub length: f64,
    /// Direction leaving the start cone.
    pub out_angle: ConeAngle,
    /// Direction pointing back along the connection at the end cone.
    pub in_back_angle: ConeAngle,
    pub reversal_id: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSet {
    pub cutoff: f64,
    /// Sorted by start class, then length, then outgoing angle; `id` is the index.
    pub saddles: Vec<SaddleConnection>,
    pub records: u64,
    pub degenerate_wedges: u64,
    /// Reversals synthesised because rounding dropped them at the cutoff.
    pub added_reversals: usize,
}

impl SaddleSet {
    pub fn len(&self) -> usize {
        self.saddles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.saddles.is_empty()
    }

    pub fn get(&self, id: usize) -> &SaddleConnection {
        &self.saddles[id]
    }

    /// Number of connections of length at most `l`.
    pub fn count_up_to(&self, l: f64) -> usize {
        let cut = l * (1.0 + LENGTH_SLACK);
        self.saddles.iter().filter(|s| s.length <= cut).count()
    }

    pub fn min_length(&self) -> Option<f64> {
        self.saddles.iter().map(|s| s.length).min_by(f64::total_cmp)
    }

    /// `id,start,end,re,im,length,out_sector,out_offset,in_sector,in_offset,reversal_id`
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("id,start,end,re,im,length,out_sector,out_offset,in_sector,in_offset,reversal_id\n");
        for s in &self.saddles {
            let _ = writeln!(
                out,
                "{},{},{},{:?},{:?},{:?},{},{:?},{},{:?},{}",
                s.id,
                s.start_class,
                s.end_class,
                s.holonomy[0],
                s.holonomy[1],
                s.length,
                s.out_angle.sector,
                s.out_angle.offset,
                s.in_back_angle.sector,
                s.in_back_angle.offset,
                s.reversal_id
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    start: CornerRef,
    end: CornerRef,
    holonomy: Point,
}

#[derive(Debug, Clone, Copy)]
struct Wedge {
    tri: usize,
    edge: usize,
    shift: Point,
    lo: Point,
    hi: Point,
    lo_open: bool,
    hi_open: bool,
}

struct Walk<'a> {
    tris: &'a [Triangle],
    cutoff: f64,
    budget: u64,
    records: &'a AtomicU64,
    abort: &'a AtomicBool,
    degenerate: &'a AtomicU64,
}

fn segment_distance(a: Point, b: Point) -> f64 {
    let d = sub(b, a);
    let len2 = dot(d, d);
    let t = if len2 > 0.0 {
        (-dot(a, d) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm([a[0] + t * d[0], a[1] + t * d[1]])
}

impl Walk<'_> {
    /// Pushes the wedge through edge `e` of triangle `t` unless the edge lies
    /// entirely beyond the cutoff.
    fn cross_edge(&self, stack: &mut Vec<Wedge>, w: &Wedge, e: usize, bounds: (Point, Point, bool, bool)) {
        let t = &self.tris[w.tri];
        let a = add(t.pts[e], w.shift);
        let b = add(t.pts[(e + 1) % 3], w.shift);
        if segment_distance(a, b) > self.cutoff {
            return;
        }
        let n = t.nbr[e];
        stack.push(Wedge {
            tri: n.tri,
            edge: n.edge,
            shift: add(w.shift, n.shift),
            lo: bounds.0,
            hi: bounds.1,
            lo_open: bounds.2,
            hi_open: bounds.3,
        });
    }

    fn record(&self, hits: &mut Vec<Hit>, start: CornerRef, end: CornerRef, h: Point) {
        if norm(h) <= self.cutoff {
            hits.push(Hit { start, end, holonomy: h });
        }
    }

    /// All singular vertices visible from corner `k` of triangle `t0` within
    /// the corner's closed wedge.
    fn run(&self, t0: usize, k: usize) -> Vec<Hit> {
        let tri = &self.tris[t0];
        let start = tri.corner(k);
        let apex = tri.pts[k];
        let shift = [-apex[0], -apex[1]];
        let lo = sub(tri.pts[(k + 1) % 3], apex);
        let hi = sub(tri.pts[(k + 2) % 3], apex);
        let mut hits = Vec::new();
        self.record(&mut hits, start, tri.corner(k + 1), lo);
        self.record(&mut hits, start, tri.corner(k + 2), hi);
        let mut stack = Vec::new();
        let root = Wedge {
            tri: t0,
            edge: 0,
            shift,
            lo,
            hi,
            lo_open: true,
            hi_open: true,
        };
        self.cross_edge(&mut stack, &root, (k + 1) % 3, (lo, hi, true, true));

        let mut local = 0u64;
        while let Some(w) = stack.pop() {
            local += 1;
            if local % FLUSH_EVERY == 0 {
                let total = self.records.fetch_add(FLUSH_EVERY, Ordering::Relaxed) + FLUSH_EVERY;
                if total > self.budget || self.abort.load(Ordering::Relaxed) {
                    self.abort.store(true, Ordering::Relaxed);
                    return hits;
                }
            }
            let t = &self.tris[w.tri];
            let i = w.edge;
            let apex_w = add(t.pts[(i + 2) % 3], w.shift);
            let end = t.corner(i + 2);
            let side_lo = cross(w.lo, apex_w);
            let side_hi = cross(apex_w, w.hi);
            let tol_lo = ORIENT_EPS * norm(w.lo) * norm(apex_w);
            let tol_hi = ORIENT_EPS * norm(w.hi) * norm(apex_w);
            let on_lo = side_lo.abs() <= tol_lo;
            let on_hi = side_hi.abs() <= tol_hi;
            let next_lo = (i + 1) % 3;
            let next_hi = (i + 2) % 3;
            if on_lo && on_hi {
                self.degenerate.fetch_add(1, Ordering::Relaxed);
            } else if side_lo > tol_lo && side_hi > tol_hi {
                self.record(&mut hits, start, end, apex_w);
                self.cross_edge(&mut stack, &w, next_lo, (w.lo, apex_w, w.lo_open, true));
                self.cross_edge(&mut stack, &w, next_hi, (apex_w, w.hi, true, w.hi_open));
            } else if on_lo && side_hi > 0.0 {
                if !w.lo_open {
                    self.record(&mut hits, start, end, apex_w);
                }
                self.cross_edge(&mut stack, &w, next_hi, (apex_w, w.hi, true, w.hi_open));
            } else if on_hi && side_lo > 0.0 {
                if !w.hi_open {
                    self.record(&mut hits, start, end, apex_w);
                }
                self.cross_edge(&mut stack, &w, next_lo, (w.lo, apex_w, w.lo_open, true));
            } else if side_lo < 0.0 {
                self.cross_edge(&mut stack, &w, next_hi, (w.lo, w.hi, w.lo_open, w.hi_open));
            } else {
                self.cross_edge(&mut stack, &w, next_lo, (w.lo, w.hi, w.lo_open, w.hi_open));
            }
        }
        self.records.fetch_add(local % FLUSH_EVERY, Ordering::Relaxed);
        hits
    }
}

/// Saddle connections of length at most `cutoff`, with default options.
pub fn enumerate_saddles(s: &TranslationSurface, cutoff: f64) -> Result<SaddleSet, SurfaceError> {
    enumerate_saddles_with(s, cutoff, SaddleOptions::default())
}

/// Develops the surface around every corner and propagates visibility
/// wedges across triangle edges; each singular vertex seen strictly inside a
/// wedge (or on a closed boundary ray) is a saddle connection. Output is
/// independent of the thread count.
pub fn enumerate_saddles_with(
    s: &TranslationSurface,
    cutoff: f64,
    opts: SaddleOptions,
) -> Result<SaddleSet, SurfaceError> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(SurfaceError::BadCutoff(cutoff));
    }
    let tris = triangulate(s)?;
    let records = AtomicU64::new(0);
    let abort = AtomicBool::new(false);
    let degenerate = AtomicU64::new(0);
    let walk = Walk {
        tris: &tris,
        cutoff: cutoff * (1.0 + LENGTH_SLACK),
        budget: opts.record_budget,
        records: &records,
        abort: &abort,
        degenerate: &degenerate,
    };
    let roots: Vec<(usize, usize)> = (0..tris.len()).flat_map(|t| (0..3).map(move |k| (t, k))).collect();
    let work = || -> Vec<Vec<Hit>> { roots.par_iter().map(|&(t, k)| walk.run(t, k)).collect() };
    let per_root = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| SurfaceError::Internal(e.to_string()))?
            .install(work),
        None => work(),
    };
    let used = records.load(Ordering::Relaxed);
    if abort.load(Ordering::Relaxed) || used > opts.record_budget {
        return Err(SurfaceError::BudgetExceeded {
            records: used,
            budget: opts.record_budget,
        });
    }

    let mut found: Vec<SaddleConnection> = per_root
        .into_iter()
        .flatten()
        .map(|h| to_connection(s, &h))
        .collect();
    dedup(s, &mut found);
    let added_reversals = close_under_reversal(s, &mut found);
    found.sort_by(|a, b| {
        a.start_class
            .cmp(&b.start_class)
            .then(length_key(a.length).cmp(&length_key(b.length)))
            .then(a.out_angle.value().total_cmp(&b.out_angle.value()))
    });
    for (i, c) in found.iter_mut().enumerate() {
        c.id = i;
    }
    let index = AngleIndex::new(s, &found);
    for i in 0..found.len() {
        let c = &found[i];
        found[i].reversal_id = index
            .find(c.end_class, c.in_back_angle)
            .ok_or_else(|| SurfaceError::Internal("reversal missing after closure".into()))?;
    }
    Ok(SaddleSet {
        cutoff,
        saddles: found,
        records: used,
        degenerate_wedges: degenerate.load(Ordering::Relaxed),
        added_reversals,
    })
}

fn length_key(l: f64) -> i64 {
    (l * 1e9).round() as i64
}

fn to_connection(s: &TranslationSurface, h: &Hit) -> SaddleConnection {
    SaddleConnection {
        id: 0,
        start_class: s.corner_class(h.start),
        end_class: s.corner_class(h.end),
        holonomy: h.holonomy,
        length: norm(h.holonomy),
        out_angle: s.angle_at(h.start, h.holonomy),
        in_back_angle: s.angle_at(h.end, [-h.holonomy[0], -h.holonomy[1]]),
        reversal_id: 0,
    }
}

fn cone_of(s: &TranslationSurface, class: usize) -> f64 {
    s.classes()[class].cone_angle
}

/// Keeps one connection per `(start class, outgoing angle)`.
fn dedup(s: &TranslationSurface, found: &mut Vec<SaddleConnection>) {
    found.sort_by(|a, b| {
        a.start_class
            .cmp(&b.start_class)
            .then(a.out_angle.value().total_cmp(&b.out_angle.value()))
    });
    let mut kept: Vec<SaddleConnection> = Vec::with_capacity(found.len());
    for c in found.drain(..) {
        match kept.last() {
            Some(last)
                if last.start_class == c.start_class
                    && c.out_angle.value() - last.out_angle.value() <= DEDUP_TOL => {}
            _ => kept.push(c),
        }
    }
    // merge across the wrap-around of each cone
    let mut i = 0;
    while i < kept.len() {
        let class = kept[i].start_class;
        let j = kept[i..].iter().position(|c| c.start_class != class).map_or(kept.len(), |p| i + p);
        if j - i > 1 && kept[i].out_angle.value() + cone_of(s, class) - kept[j - 1].out_angle.value() <= DEDUP_TOL {
            kept.remove(j - 1);
            i = j - 1;
        } else {
            i = j;
        }
    }
    *found = kept;
}

/// Lookup of connections by `(start class, outgoing angle)`.
struct AngleIndex {
    by_class: Vec<Vec<(f64, usize)>>,
    cones: Vec<f64>,
}

impl AngleIndex {
    fn new(s: &TranslationSurface, found: &[SaddleConnection]) -> AngleIndex {
        let mut by_class = vec![Vec::new(); s.classes().len()];
        for (i, c) in found.iter().enumerate() {
            by_class[c.start_class].push((c.out_angle.value(), i));
        }
        for v in &mut by_class {
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        AngleIndex {
            by_class,
            cones: s.classes().iter().map(|c| c.cone_angle).collect(),
        }
    }

    fn find(&self, class: usize, angle: ConeAngle) -> Option<usize> {
        let v = &self.by_class[class];
        let theta = angle.value();
        let near = |x: f64| {
            let d = (x - theta).abs();
            d <= DEDUP_TOL || self.cones[class] - d <= DEDUP_TOL
        };
        let p = v.partition_point(|e| e.0 < theta - DEDUP_TOL);
        [p, 0, v.len().wrapping_sub(1)]
            .into_iter()
            .filter_map(|k| v.get(k))
            .find(|e| near(e.0))
            .map(|e| e.1)
    }
}

fn close_under_reversal(s: &TranslationSurface, found: &mut Vec<SaddleConnection>) -> usize {
    let index = AngleIndex::new(s, found);
    let missing: Vec<SaddleConnection> = found
        .iter()
        .filter(|c| index.find(c.end_class, c.in_back_angle).is_none())
        .map(|c| SaddleConnection {
            id: 0,
            start_class: c.end_class,
            end_class: c.start_class,
            holonomy: [-c.holonomy[0], -c.holonomy[1]],
            length: c.length,
            out_angle: c.in_back_angle,
            in_back_angle: c.out_angle,
            reversal_id: 0,
        })
        .collect();
    let n = missing.len();
    found.extend(missing);
    n
}
