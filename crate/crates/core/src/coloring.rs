//! Exact four-coloring for desk-scale planar graphs.
//!
//! The search colors vertices in DSATUR order (most distinct neighbor
//! colors first, then most uncolored neighbors, then a seeded random
//! priority) and backtracks on failure. When a vertex already sees all four
//! colors, Kempe-chain interchanges among the colored vertices are tried as
//! extra branches before backtracking. Every branch of plain backtracking is
//! still explored, so the search is complete: it either finds a proper
//! coloring, proves none exists, or runs out of time.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::UndirectedGraph;

pub const DEFAULT_TIME_BUDGET: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    White,
    Red,
    Green,
    Black,
}

impl Color {
    pub const ALL: [Color; 4] = [Color::White, Color::Red, Color::Green, Color::Black];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Color> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Color::White => "white",
            Color::Red => "red",
            Color::Green => "green",
            Color::Black => "black",
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Color {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "white" | "w" => Ok(Color::White),
            "red" | "r" => Ok(Color::Red),
            "green" | "g" => Ok(Color::Green),
            "black" | "b" => Ok(Color::Black),
            other => Err(format!("unknown color {other:?}")),
        }
    }
}

/// Node -> color map. Entries may be missing only for hand-built inputs;
/// the colorer always returns a total assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorAssignment {
    colors: Vec<Option<Color>>,
}

impl ColorAssignment {
    pub fn new(colors: Vec<Color>) -> Self {
        Self { colors: colors.into_iter().map(Some).collect() }
    }

    pub fn partial(colors: Vec<Option<Color>>) -> Self {
        Self { colors }
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn get(&self, u: usize) -> Option<Color> {
        self.colors.get(u).copied().flatten()
    }

    pub fn is_total(&self) -> bool {
        self.colors.iter().all(Option::is_some)
    }

    pub fn colors_used(&self) -> usize {
        let mut seen = [false; 4];
        for c in self.colors.iter().flatten() {
            seen[c.index()] = true;
        }
        seen.iter().filter(|&&s| s).count()
    }

    /// "node color" lines.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for (u, c) in self.colors.iter().enumerate() {
            if let Some(c) = c {
                out.push_str(&format!("{u} {c}\n"));
            }
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ColoringError {
    #[error("no 4-coloring found within {budget:?}")]
    Timeout { budget: Duration },
    #[error("the graph has no proper 4-coloring")]
    NotFourColorable,
    #[error("node {0} has no color")]
    MissingColor(usize),
    #[error("assignment covers {found} nodes, graph has {expected}")]
    LengthMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColoringOptions {
    pub time_budget: Duration,
    pub seed: u64,
}

impl Default for ColoringOptions {
    fn default() -> Self {
        Self { time_budget: DEFAULT_TIME_BUDGET, seed: 0 }
    }
}

/// Lists every monochromatic edge. Empty means proper.
pub fn verify_coloring(g: &UndirectedGraph, f: &ColorAssignment) -> Result<Vec<(usize, usize)>, ColoringError> {
    if f.len() != g.node_count() {
        return Err(ColoringError::LengthMismatch { expected: g.node_count(), found: f.len() });
    }
    if let Some(u) = (0..f.len()).find(|&u| f.get(u).is_none()) {
        return Err(ColoringError::MissingColor(u));
    }
    Ok(g.edges().iter().copied().filter(|&(u, v)| f.get(u) == f.get(v)).collect())
}

struct Search<'a> {
    g: &'a UndirectedGraph,
    colors: Vec<Option<u8>>,
    counts: [usize; 4],
    priority: Vec<usize>,
    deadline: Instant,
    steps: u64,
}

enum Outcome {
    Found,
    Exhausted,
}

impl<'a> Search<'a> {
    fn neighbor_mask(&self, v: usize) -> u8 {
        self.g
            .neighbors(v)
            .iter()
            .filter_map(|&w| self.colors[w])
            .fold(0u8, |m, c| m | (1 << c))
    }

    fn pick(&self) -> Option<usize> {
        (0..self.colors.len())
            .filter(|&v| self.colors[v].is_none())
            .max_by_key(|&v| {
                let sat = self.neighbor_mask(v).count_ones();
                let open = self.g.neighbors(v).iter().filter(|&&w| self.colors[w].is_none()).count();
                (sat, open, self.priority[v])
            })
    }

    /// Colors worth trying at `v`: free colors that are already in use,
    /// plus the first unused one (unused colors are interchangeable).
    fn choices(&self, v: usize) -> Vec<u8> {
        let mask = self.neighbor_mask(v);
        let mut out = Vec::with_capacity(4);
        let mut fresh_taken = false;
        for c in 0..4u8 {
            if mask & (1 << c) != 0 {
                continue;
            }
            if self.counts[c as usize] > 0 {
                out.push(c);
            } else if !fresh_taken {
                out.push(c);
                fresh_taken = true;
            }
        }
        out
    }

    fn set(&mut self, v: usize, c: Option<u8>) {
        if let Some(old) = self.colors[v] {
            self.counts[old as usize] -= 1;
        }
        if let Some(new) = c {
            self.counts[new as usize] += 1;
        }
        self.colors[v] = c;
    }

    /// Colored vertices reachable from `start` through colors `a` and `b`.
    fn kempe_chain(&self, start: usize, a: u8, b: u8) -> Vec<usize> {
        let mut seen = vec![false; self.colors.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut chain = Vec::new();
        while let Some(u) = queue.pop_front() {
            chain.push(u);
            for &w in self.g.neighbors(u) {
                if !seen[w] && matches!(self.colors[w], Some(c) if c == a || c == b) {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        chain
    }

    fn swap(&mut self, chain: &[usize], a: u8, b: u8) {
        for &u in chain {
            let c = self.colors[u].expect("kempe chains only hold colored vertices");
            self.set(u, Some(if c == a { b } else { a }));
        }
    }

    fn tick(&mut self) -> Result<(), ()> {
        self.steps += 1;
        if self.steps.is_multiple_of(256) && Instant::now() >= self.deadline {
            return Err(());
        }
        Ok(())
    }

    fn try_colors(&mut self, v: usize) -> Result<Outcome, ()> {
        for c in self.choices(v) {
            self.set(v, Some(c));
            if let Outcome::Found = self.run()? {
                return Ok(Outcome::Found);
            }
            self.set(v, None);
        }
        Ok(Outcome::Exhausted)
    }

    fn run(&mut self) -> Result<Outcome, ()> {
        self.tick()?;
        let Some(v) = self.pick() else {
            return Ok(Outcome::Found);
        };
        if self.neighbor_mask(v) != 0b1111 {
            return self.try_colors(v);
        }
        // Dead end: try to free a color at v by swapping a Kempe chain.
        for a in 0..4u8 {
            for b in (a + 1)..4u8 {
                let mut tried = vec![false; self.colors.len()];
                let starts: Vec<usize> = self
                    .g
                    .neighbors(v)
                    .iter()
                    .copied()
                    .filter(|&w| self.colors[w] == Some(a))
                    .collect();
                for w in starts {
                    if tried[w] {
                        continue;
                    }
                    let chain = self.kempe_chain(w, a, b);
                    for &u in &chain {
                        tried[u] = true;
                    }
                    self.swap(&chain, a, b);
                    if self.neighbor_mask(v) != 0b1111 {
                        if let Outcome::Found = self.try_colors(v)? {
                            return Ok(Outcome::Found);
                        }
                    }
                    self.swap(&chain, a, b);
                }
            }
        }
        Ok(Outcome::Exhausted)
    }
}

/// Relabels colors in order of first appearance among non-singleton nodes,
/// so the lowest-index non-singleton is white.
fn canonicalize(g: &UndirectedGraph, raw: &[Option<u8>]) -> Vec<Color> {
    let mut map = [None::<u8>; 4];
    let mut next = 0u8;
    for (u, &color) in raw.iter().enumerate() {
        if g.is_singleton(u) {
            continue;
        }
        let c = color.expect("search colors every non-singleton") as usize;
        if map[c].is_none() {
            map[c] = Some(next);
            next += 1;
        }
    }
    (0..g.node_count())
        .map(|u| match raw[u] {
            Some(c) if !g.is_singleton(u) => Color::from_index(map[c as usize].unwrap() as usize).unwrap(),
            _ => Color::White,
        })
        .collect()
}

/// Proper coloring with at most four colors. Singletons are white.
pub fn four_color(g: &UndirectedGraph, options: ColoringOptions) -> Result<ColorAssignment, ColoringError> {
    let n = g.node_count();
    let mut priority: Vec<usize> = (0..n).collect();
    priority.shuffle(&mut ChaCha8Rng::seed_from_u64(options.seed));

    let mut search = Search {
        g,
        colors: vec![None; n],
        counts: [0; 4],
        priority,
        deadline: Instant::now() + options.time_budget,
        steps: 0,
    };
    for u in 0..n {
        if g.is_singleton(u) {
            // Kept out of the search; colored white afterwards.
            search.colors[u] = Some(0);
        }
    }
    match search.run() {
        Err(()) => return Err(ColoringError::Timeout { budget: options.time_budget }),
        Ok(Outcome::Exhausted) => return Err(ColoringError::NotFourColorable),
        Ok(Outcome::Found) => {}
    }
    let f = ColorAssignment::new(canonicalize(g, &search.colors));
    let bad = verify_coloring(g, &f)?;
    assert!(bad.is_empty(), "search produced a monochromatic edge {bad:?}");
    Ok(f)
}
