//! Graph 3-coloring as a one-round PCP.
//!
//! The proof string is a coloring (one symbol in `{0, 1, 2}` per vertex),
//! the verifier picks a uniform edge and accepts iff its endpoints carry
//! distinct valid colors.

use serde::{Deserialize, Serialize};

use super::StaticProver;
use crate::iop::{Challenge, ChallengeSpace, Iop, IopError, IopProver, IopSpec, ProofString, QueryPlan, Symbol, Witness};

pub const COLORS: u64 = 3;

/// Exhaustive max-3-cut search is limited to this many vertices.
pub const EXHAUSTIVE_VERTEX_LIMIT: usize = 13;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GraphColoringInstance {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl GraphColoringInstance {
    /// Vertices are `0..vertices`; edges are normalized to `(min, max)` and
    /// sorted lexicographically.
    pub fn new(vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, IopError> {
        if vertices == 0 {
            return Err(IopError::InvalidInstance("graph has no vertices".into()));
        }
        if vertices > u32::MAX as usize {
            return Err(IopError::InvalidInstance("too many vertices".into()));
        }
        let mut list = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(IopError::InvalidInstance(format!("self-loop at vertex {u}")));
            }
            if u >= vertices || v >= vertices {
                return Err(IopError::InvalidInstance(format!("edge ({u}, {v}) leaves the vertex range")));
            }
            list.push((u.min(v), u.max(v)));
        }
        if list.is_empty() {
            return Err(IopError::InvalidInstance("graph has no edges".into()));
        }
        list.sort_unstable();
        if list.windows(2).any(|w| w[0] == w[1]) {
            return Err(IopError::InvalidInstance("duplicate edge".into()));
        }
        Ok(Self { vertices, edges: list })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Self::new(n, edges).expect("K_n with n >= 2")
    }

    /// The Petersen graph (10 vertices, 15 edges, 3-colorable).
    pub fn petersen() -> Self {
        let outer = (0..5).map(|i| (i, (i + 1) % 5));
        let spokes = (0..5).map(|i| (i, i + 5));
        let inner = (0..5).map(|i| (5 + i, 5 + (i + 2) % 5));
        Self::new(10, outer.chain(spokes).chain(inner)).expect("petersen")
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn satisfied_edges(&self, coloring: &[Symbol]) -> usize {
        self.edges
            .iter()
            .filter(|&&(u, v)| coloring[u] < COLORS && coloring[v] < COLORS && coloring[u] != coloring[v])
            .count()
    }

    pub fn is_proper(&self, coloring: &[Symbol]) -> bool {
        coloring.len() == self.vertices && self.satisfied_edges(coloring) == self.edges.len()
    }

    /// Finds a proper 3-coloring by backtracking, if one exists.
    pub fn find_coloring(&self) -> Option<Witness> {
        let mut adj = vec![Vec::new(); self.vertices];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut colors: Vec<Option<Symbol>> = vec![None; self.vertices];
        fn go(v: usize, adj: &[Vec<usize>], colors: &mut [Option<Symbol>]) -> bool {
            if v == colors.len() {
                return true;
            }
            for c in 0..COLORS {
                if adj[v].iter().all(|&u| colors[u] != Some(c)) {
                    colors[v] = Some(c);
                    if go(v + 1, adj, colors) {
                        return true;
                    }
                }
            }
            colors[v] = None;
            false
        }
        go(0, &adj, &mut colors).then(|| colors.into_iter().map(|c| c.expect("assigned")).collect())
    }

    /// Coloring maximizing the number of properly colored edges (first in
    /// lexicographic order among the maximizers).
    pub fn best_coloring(&self) -> Result<(Witness, usize), IopError> {
        if let Some(w) = self.find_coloring() {
            return Ok((w, self.edges.len()));
        }
        if self.vertices > EXHAUSTIVE_VERTEX_LIMIT {
            return Err(IopError::InvalidInstance(format!(
                "exhaustive coloring search limited to {EXHAUSTIVE_VERTEX_LIMIT} vertices"
            )));
        }
        let mut coloring = vec![0; self.vertices];
        let mut best = (coloring.clone(), self.satisfied_edges(&coloring));
        while advance(&mut coloring) {
            let s = self.satisfied_edges(&coloring);
            if s > best.1 {
                best = (coloring.clone(), s);
            }
        }
        Ok(best)
    }
}

fn advance(digits: &mut [Symbol]) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < COLORS {
            return true;
        }
        *d = 0;
    }
    false
}

#[derive(Debug, Clone)]
pub struct GcPcp {
    instance: GraphColoringInstance,
    spec: IopSpec,
}

impl GcPcp {
    pub fn new(instance: GraphColoringInstance) -> Self {
        let spec = IopSpec::new(
            "graph-3-coloring",
            COLORS,
            vec![instance.vertices],
            vec![ChallengeSpace::for_modulus(instance.edges.len() as u64)],
            vec![2],
        )
        .expect("a nonempty simple graph gives a valid spec");
        Self { instance, spec }
    }

    pub fn instance(&self) -> &GraphColoringInstance {
        &self.instance
    }

    pub fn edge_for(&self, challenge: &Challenge) -> (usize, usize) {
        self.instance.edges[self.spec.challenges[0].decode(challenge) as usize]
    }

    /// Fixed-string prover for an arbitrary (possibly improper) coloring.
    pub fn coloring_prover(&self, coloring: &[Symbol]) -> Result<Box<dyn IopProver>, IopError> {
        if coloring.len() != self.instance.vertices || coloring.iter().any(|&c| c >= COLORS) {
            return Err(IopError::InvalidWitness("coloring must assign a color in {0,1,2} to every vertex".into()));
        }
        Ok(Box::new(StaticProver::new(self.spec.clone(), vec![coloring.to_vec()])))
    }
}

impl Iop for GcPcp {
    fn name(&self) -> &'static str {
        "gc"
    }

    fn spec(&self) -> &IopSpec {
        &self.spec
    }

    fn query(&self, randomness: &[Challenge]) -> Result<QueryPlan, IopError> {
        self.spec.check_randomness(randomness)?;
        let (u, v) = self.edge_for(&randomness[0]);
        Ok(QueryPlan { sets: vec![vec![u + 1, v + 1]] })
    }

    fn decide(&self, randomness: &[Challenge], answers: &[Vec<Symbol>]) -> bool {
        if self.spec.check_randomness(randomness).is_err() || answers.len() != 1 || answers[0].len() != 2 {
            return false;
        }
        let (a, b) = (answers[0][0], answers[0][1]);
        a < COLORS && b < COLORS && a != b
    }

    fn in_language(&self) -> bool {
        self.instance.find_coloring().is_some()
    }

    fn check_witness(&self, witness: &[Symbol]) -> bool {
        self.instance.is_proper(witness)
    }

    fn extract_witness(&self, strings: &[ProofString]) -> Witness {
        strings.first().map(|s| s.symbols.clone()).unwrap_or_default()
    }

    fn honest_prover(&self, witness: &[Symbol]) -> Result<Box<dyn IopProver>, IopError> {
        if !self.instance.is_proper(witness) {
            return Err(IopError::InvalidWitness("not a proper 3-coloring".into()));
        }
        self.coloring_prover(witness)
    }

    fn encode_instance(&self) -> Vec<u8> {
        super::Instance::Gc(self.instance.clone()).encode()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iop::{brute_force_soundness, iop_interact, prover_init};
    use crate::seed;
    use num_rational::Ratio;

    #[test]
    fn instance_validation() {
        assert!(GraphColoringInstance::new(3, [(0, 0)]).is_err());
        assert!(GraphColoringInstance::new(3, [(0, 3)]).is_err());
        assert!(GraphColoringInstance::new(3, Vec::<(usize, usize)>::new()).is_err());
        assert!(GraphColoringInstance::new(3, [(0, 1), (1, 0)]).is_err());
        let g = GraphColoringInstance::new(3, [(2, 1), (0, 2), (1, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn honest_proof_is_the_witness() {
        let pcp = GcPcp::new(GraphColoringInstance::complete(3));
        let (pi, _) = prover_init(&pcp, &[0, 1, 2]).unwrap();
        assert_eq!(pi.symbols, vec![0, 1, 2]);
        assert!(pcp.honest_prover(&[0, 0, 1]).is_err());
    }

    #[test]
    fn first_edge_is_queried_at_index_zero() {
        let pcp = GcPcp::new(GraphColoringInstance::complete(3));
        let r = pcp.spec().challenges[0].canonical(0);
        assert_eq!(pcp.query(std::slice::from_ref(&r)).unwrap().sets, vec![vec![1, 2]]);
        assert_eq!(pcp.query(std::slice::from_ref(&r)).unwrap(), pcp.query(&[r.clone()]).unwrap());
        assert!(pcp.decide(std::slice::from_ref(&r), &[vec![0, 1]]));
        assert!(!pcp.decide(std::slice::from_ref(&r), &[vec![2, 2]]));
        assert!(!pcp.decide(std::slice::from_ref(&r), &[vec![3, 1]]));
        assert!(!pcp.decide(std::slice::from_ref(&r), &[vec![0]]));
    }

    #[test]
    fn spec_shape() {
        let pcp = GcPcp::new(GraphColoringInstance::complete(3));
        let s = pcp.spec();
        assert_eq!(s.rounds(), 1);
        assert_eq!(s.proof_lengths, vec![3]);
        assert_eq!(s.query_counts, vec![2]);
        assert_eq!(s.challenges[0].bits, 2 + 64);
        let single = GcPcp::new(GraphColoringInstance::new(2, [(0, 1)]).unwrap());
        assert_eq!(single.spec().challenges[0].bits, 64);
        assert!(single.in_language());
    }

    #[test]
    fn completeness_over_seeds() {
        let pcp = GcPcp::new(GraphColoringInstance::petersen());
        let w = pcp.instance().find_coloring().unwrap();
        for s in 0..200 {
            let mut p = pcp.honest_prover(&w).unwrap();
            let mut rng = seed::stream(s, "gc", 0);
            assert!(iop_interact(&pcp, p.as_mut(), &mut rng).accepted);
        }
    }

    #[test]
    fn k4_soundness_is_five_sixths() {
        // oracle: 3^4 colorings, the best properly colors 5 of 6 edges
        let g = GraphColoringInstance::complete(4);
        let mut best = 0;
        for code in 0..81u32 {
            let c: Vec<Symbol> = (0..4).map(|i| ((code / 3u32.pow(i)) % 3) as Symbol).collect();
            best = best.max(g.satisfied_edges(&c));
        }
        assert_eq!(best, 5);
        let pcp = GcPcp::new(g);
        assert!(!pcp.in_language());
        assert_eq!(brute_force_soundness(&pcp).unwrap(), Ratio::new(5, 6));
        assert_eq!(pcp.instance().best_coloring().unwrap().1, 5);
    }

    #[test]
    fn k3_soundness_is_one() {
        let pcp = GcPcp::new(GraphColoringInstance::complete(3));
        assert_eq!(brute_force_soundness(&pcp).unwrap(), Ratio::from_integer(1));
    }

    #[test]
    fn petersen_is_three_colorable() {
        let g = GraphColoringInstance::petersen();
        assert_eq!(g.edges().len(), 15);
        assert!(g.is_proper(&g.find_coloring().unwrap()));
    }
}
