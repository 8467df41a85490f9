#pragma once

#include <cstdint>
#include <vector>

#include "causalembed/dataset.hpp"

namespace causalembed::dgp {

// Finite-support structural causal models for the four graph shapes the
// estimators cover. `z` is the back-door covariate X or the front-door
// mediator M depending on the graph; `o` is the observable confounder and
// has a single dummy value in the two-variable graphs.
enum class ToyGraph { backdoor, frontdoor, obs_backdoor, obs_frontdoor };

std::string toy_graph_name(ToyGraph g);
ToyGraph toy_graph_from_name(const std::string& name);

// Conditional probability tables, rows indexed by parent configuration in
// row-major order over the parents listed below, each row summing to 1:
//   backdoor:      p_z rows u        (X|U),   p_a rows z        (A|X),
//                  p_y rows (a,u)    (Y|A,U)
//   frontdoor:     p_a rows u        (A|U),   p_z rows a        (M|A),
//                  p_y rows (z,u)    (Y|M,U)
//   obs_backdoor:  p_z rows (u,o)    (X|U,O), p_a rows (z,o)    (A|X,O),
//                  p_y rows (a,o,u)  (Y|A,O,U)
//   obs_frontdoor: p_a rows (u,o)    (A|U,O), p_z rows (a,o)    (M|A,O),
//                  p_y rows (z,o,u)  (Y|M,O,U)
// p_uo is the (U,O) joint in all cases (|O| = 1 when O is absent).
struct DiscreteToySpec {
  ToyGraph graph = ToyGraph::backdoor;
  std::vector<double> u_values{0.0, 1.0};
  std::vector<double> o_values{0.0};
  std::vector<double> z_values{0.0, 1.0};
  std::vector<double> a_values{0.0, 1.0};
  std::vector<double> y_values{0.0, 1.0};
  std::vector<double> p_uo;
  std::vector<double> p_a;
  std::vector<double> p_z;
  std::vector<double> p_y;

  bool has_confounder() const {
    return graph == ToyGraph::obs_backdoor || graph == ToyGraph::obs_frontdoor;
  }
  // Throws InvalidDistribution on negative entries, bad table sizes, or
  // rows off 1 by more than 1e-12.
  void validate() const;
};

// Exact joint distribution over (u, o, z, a, y) index tuples, flat in
// row-major order with y fastest. Owns a copy of the spec it was built from.
struct ToyJoint {
  DiscreteToySpec spec;
  std::vector<double> p;

  double prob(std::size_t u, std::size_t o, std::size_t z, std::size_t a,
              std::size_t y) const;
  // E[Y | A = a, Z = z] (two-variable graphs).
  double g2(std::size_t a, std::size_t z) const;
  // E[Y | A = a, O = o, Z = z].
  double g3(std::size_t a, std::size_t o, std::size_t z) const;
};

ToyJoint toy_joint(const DiscreteToySpec& spec);

struct DiscreteToyData {
  ColumnarDataset data;
  ToyJoint joint;  // joint.spec records the generating tables
};

// i.i.d. samples in ancestral order: (u,o), then z/a per graph, then y.
DiscreteToyData gen_discrete_toy(const DiscreteToySpec& spec, std::size_t n,
                                 std::uint64_t seed);

// Causal parameters by exact summation of the adjustment formulas over the
// true joint (back-door/front-door, two- and three-variable variants).
double toy_ate(const ToyJoint& joint, std::size_t a_idx);
double toy_att(const ToyJoint& joint, std::size_t a_idx,
               std::size_t aprime_idx);
double toy_cate(const ToyJoint& joint, std::size_t a_idx, std::size_t o_idx);

// The same parameters from the potential-outcome definitions evaluated
// directly on the structural model; equal to the adjustment formulas under
// the graph assumptions, so the pair cross-checks both implementations.
double toy_ate_structural(const ToyJoint& joint, std::size_t a_idx);
double toy_att_structural(const ToyJoint& joint, std::size_t a_idx,
                          std::size_t aprime_idx);
double toy_cate_structural(const ToyJoint& joint, std::size_t a_idx,
                           std::size_t o_idx);

// Random binary-support spec with conditional probabilities bounded away
// from 0 and 1, so every conditioning event is well represented in samples.
DiscreteToySpec random_toy_spec(ToyGraph graph, std::uint64_t seed);

}  // namespace causalembed::dgp
