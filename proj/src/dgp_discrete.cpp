#include "causalembed/dgp/discrete.hpp"

#include <cmath>
#include <string>

#include "causalembed/rng.hpp"

namespace causalembed::dgp {

namespace {

void check_table(const std::vector<double>& table, std::size_t rows,
                 std::size_t cols, const std::string& name) {
  if (table.size() != rows * cols) {
    throw InvalidDistribution("toy spec: table " + name + " has " +
                              std::to_string(table.size()) +
                              " entries, expected " +
                              std::to_string(rows * cols));
  }
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double p = table[r * cols + c];
      if (p < 0.0) {
        throw InvalidDistribution("toy spec: negative probability in " +
                                  name);
      }
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-12) {
      throw InvalidDistribution("toy spec: row " + std::to_string(r) +
                                " of " + name + " sums to " +
                                std::to_string(sum));
    }
  }
}

std::size_t sample_categorical(std::span<const double> probs,
                               PhiloxRng& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;
}

}  // namespace

std::string toy_graph_name(ToyGraph g) {
  switch (g) {
    case ToyGraph::backdoor: return "backdoor";
    case ToyGraph::frontdoor: return "frontdoor";
    case ToyGraph::obs_backdoor: return "obs-backdoor";
    case ToyGraph::obs_frontdoor: return "obs-frontdoor";
  }
  return "unknown";
}

ToyGraph toy_graph_from_name(const std::string& name) {
  if (name == "backdoor") return ToyGraph::backdoor;
  if (name == "frontdoor") return ToyGraph::frontdoor;
  if (name == "obs-backdoor") return ToyGraph::obs_backdoor;
  if (name == "obs-frontdoor") return ToyGraph::obs_frontdoor;
  throw ConfigError("unknown toy graph '" + name + "'");
}

void DiscreteToySpec::validate() const {
  const std::size_t nu = u_values.size();
  const std::size_t no = o_values.size();
  const std::size_t nz = z_values.size();
  const std::size_t na = a_values.size();
  const std::size_t ny = y_values.size();
  if (nu == 0 || no == 0 || nz == 0 || na == 0 || ny == 0) {
    throw InvalidDistribution("toy spec: all supports must be nonempty");
  }
  if (!has_confounder() && no != 1) {
    throw InvalidDistribution(
        "toy spec: graphs without an observable confounder need |O| = 1");
  }
  check_table(p_uo, 1, nu * no, "p_uo");
  switch (graph) {
    case ToyGraph::backdoor:
      check_table(p_z, nu, nz, "p_z (X|U)");
      check_table(p_a, nz, na, "p_a (A|X)");
      check_table(p_y, na * nu, ny, "p_y (Y|A,U)");
      break;
    case ToyGraph::frontdoor:
      check_table(p_a, nu, na, "p_a (A|U)");
      check_table(p_z, na, nz, "p_z (M|A)");
      check_table(p_y, nz * nu, ny, "p_y (Y|M,U)");
      break;
    case ToyGraph::obs_backdoor:
      check_table(p_z, nu * no, nz, "p_z (X|U,O)");
      check_table(p_a, nz * no, na, "p_a (A|X,O)");
      check_table(p_y, na * no * nu, ny, "p_y (Y|A,O,U)");
      break;
    case ToyGraph::obs_frontdoor:
      check_table(p_a, nu * no, na, "p_a (A|U,O)");
      check_table(p_z, na * no, nz, "p_z (M|A,O)");
      check_table(p_y, nz * no * nu, ny, "p_y (Y|M,O,U)");
      break;
  }
}

double ToyJoint::prob(std::size_t u, std::size_t o, std::size_t z,
                      std::size_t a, std::size_t y) const {
  const std::size_t no = spec.o_values.size();
  const std::size_t nz = spec.z_values.size();
  const std::size_t na = spec.a_values.size();
  const std::size_t ny = spec.y_values.size();
  return p[(((u * no + o) * nz + z) * na + a) * ny + y];
}

ToyJoint toy_joint(const DiscreteToySpec& spec) {
  spec.validate();
  const std::size_t nu = spec.u_values.size();
  const std::size_t no = spec.o_values.size();
  const std::size_t nz = spec.z_values.size();
  const std::size_t na = spec.a_values.size();
  const std::size_t ny = spec.y_values.size();

  ToyJoint joint;
  joint.spec = spec;
  joint.p.assign(nu * no * nz * na * ny, 0.0);
  for (std::size_t u = 0; u < nu; ++u) {
    for (std::size_t o = 0; o < no; ++o) {
      const double puo = spec.p_uo[u * no + o];
      for (std::size_t z = 0; z < nz; ++z) {
        for (std::size_t a = 0; a < na; ++a) {
          double chain = 0.0;
          switch (spec.graph) {
            case ToyGraph::backdoor:
              chain = spec.p_z[u * nz + z] * spec.p_a[z * na + a];
              break;
            case ToyGraph::frontdoor:
              chain = spec.p_a[u * na + a] * spec.p_z[a * nz + z];
              break;
            case ToyGraph::obs_backdoor:
              chain = spec.p_z[(u * no + o) * nz + z] *
                      spec.p_a[(z * no + o) * na + a];
              break;
            case ToyGraph::obs_frontdoor:
              chain = spec.p_a[(u * no + o) * na + a] *
                      spec.p_z[(a * no + o) * nz + z];
              break;
          }
          for (std::size_t y = 0; y < ny; ++y) {
            double py = 0.0;
            switch (spec.graph) {
              case ToyGraph::backdoor:
                py = spec.p_y[(a * nu + u) * ny + y];
                break;
              case ToyGraph::frontdoor:
                py = spec.p_y[(z * nu + u) * ny + y];
                break;
              case ToyGraph::obs_backdoor:
                py = spec.p_y[((a * no + o) * nu + u) * ny + y];
                break;
              case ToyGraph::obs_frontdoor:
                py = spec.p_y[((z * no + o) * nu + u) * ny + y];
                break;
            }
            joint.p[(((u * no + o) * nz + z) * na + a) * ny + y] =
                puo * chain * py;
          }
        }
      }
    }
  }
  return joint;
}

double ToyJoint::g2(std::size_t a, std::size_t z) const {
  const std::size_t nu = spec.u_values.size();
  const std::size_t no = spec.o_values.size();
  const std::size_t ny = spec.y_values.size();
  double mass = 0.0;
  double moment = 0.0;
  for (std::size_t u = 0; u < nu; ++u) {
    for (std::size_t o = 0; o < no; ++o) {
      for (std::size_t y = 0; y < ny; ++y) {
        const double p = prob(u, o, z, a, y);
        mass += p;
        moment += p * spec.y_values[y];
      }
    }
  }
  if (mass <= 0.0) {
    throw InvalidDistribution("toy joint: conditioning event (a,z) has "
                              "probability zero");
  }
  return moment / mass;
}

double ToyJoint::g3(std::size_t a, std::size_t o, std::size_t z) const {
  const std::size_t nu = spec.u_values.size();
  const std::size_t ny = spec.y_values.size();
  double mass = 0.0;
  double moment = 0.0;
  for (std::size_t u = 0; u < nu; ++u) {
    for (std::size_t y = 0; y < ny; ++y) {
      const double p = prob(u, o, z, a, y);
      mass += p;
      moment += p * spec.y_values[y];
    }
  }
  if (mass <= 0.0) {
    throw InvalidDistribution("toy joint: conditioning event (a,o,z) has "
                              "probability zero");
  }
  return moment / mass;
}

DiscreteToyData gen_discrete_toy(const DiscreteToySpec& spec, std::size_t n,
                                 std::uint64_t seed) {
  spec.validate();
  const std::size_t nu = spec.u_values.size();
  const std::size_t no = spec.o_values.size();
  const std::size_t nz = spec.z_values.size();
  const std::size_t na = spec.a_values.size();
  const std::size_t ny = spec.y_values.size();

  PhiloxRng rng(seed, streams::kDataset);
  std::vector<double> y(n), a(n), z(n), o(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t uo = sample_categorical(spec.p_uo, rng);
    const std::size_t u_idx = uo / no;
    const std::size_t o_idx = uo % no;
    std::size_t z_idx = 0;
    std::size_t a_idx = 0;
    switch (spec.graph) {
      case ToyGraph::backdoor:
        z_idx = sample_categorical(
            {spec.p_z.data() + u_idx * nz, nz}, rng);
        a_idx = sample_categorical(
            {spec.p_a.data() + z_idx * na, na}, rng);
        break;
      case ToyGraph::frontdoor:
        a_idx = sample_categorical(
            {spec.p_a.data() + u_idx * na, na}, rng);
        z_idx = sample_categorical(
            {spec.p_z.data() + a_idx * nz, nz}, rng);
        break;
      case ToyGraph::obs_backdoor:
        z_idx = sample_categorical(
            {spec.p_z.data() + (u_idx * no + o_idx) * nz, nz}, rng);
        a_idx = sample_categorical(
            {spec.p_a.data() + (z_idx * no + o_idx) * na, na}, rng);
        break;
      case ToyGraph::obs_frontdoor:
        a_idx = sample_categorical(
            {spec.p_a.data() + (u_idx * no + o_idx) * na, na}, rng);
        z_idx = sample_categorical(
            {spec.p_z.data() + (a_idx * no + o_idx) * nz, nz}, rng);
        break;
    }
    std::size_t y_row = 0;
    switch (spec.graph) {
      case ToyGraph::backdoor: y_row = a_idx * nu + u_idx; break;
      case ToyGraph::frontdoor: y_row = z_idx * nu + u_idx; break;
      case ToyGraph::obs_backdoor:
        y_row = (a_idx * no + o_idx) * nu + u_idx;
        break;
      case ToyGraph::obs_frontdoor:
        y_row = (z_idx * no + o_idx) * nu + u_idx;
        break;
    }
    const std::size_t y_idx = sample_categorical(
        {spec.p_y.data() + y_row * ny, ny}, rng);

    y[i] = spec.y_values[y_idx];
    a[i] = spec.a_values[a_idx];
    z[i] = spec.z_values[z_idx];
    o[i] = spec.o_values[o_idx];
  }

  ColumnarDataset data(n);
  data.add_column({Role::outcome, {"y"}, std::move(y)});
  data.add_column({Role::treatment, {"a"}, std::move(a)});
  const Role z_role = (spec.graph == ToyGraph::backdoor ||
                       spec.graph == ToyGraph::obs_backdoor)
                          ? Role::backdoor
                          : Role::frontdoor;
  data.add_column({z_role, {"z"}, std::move(z)});
  if (spec.has_confounder()) {
    data.add_column({Role::confounder, {"o"}, std::move(o)});
  }
  data.seed_provenance =
      "philox seed=" + std::to_string(seed) + " stream=dataset";

  return {std::move(data), toy_joint(spec)};
}

namespace {

// Marginal and conditional laws from the joint; all exact summations.
struct Laws {
  const ToyJoint& joint;
  const DiscreteToySpec& spec;
  std::size_t nu, no, nz, na, ny;

  explicit Laws(const ToyJoint& j)
      : joint(j),
        spec(j.spec),
        nu(spec.u_values.size()),
        no(spec.o_values.size()),
        nz(spec.z_values.size()),
        na(spec.a_values.size()),
        ny(spec.y_values.size()) {}

  double p_a_marginal(std::size_t a) const {
    double acc = 0.0;
    for (std::size_t u = 0; u < nu; ++u)
      for (std::size_t o = 0; o < no; ++o)
        for (std::size_t z = 0; z < nz; ++z)
          for (std::size_t y = 0; y < ny; ++y)
            acc += joint.prob(u, o, z, a, y);
    return acc;
  }
  double p_o_marginal(std::size_t o) const {
    double acc = 0.0;
    for (std::size_t u = 0; u < nu; ++u)
      for (std::size_t z = 0; z < nz; ++z)
        for (std::size_t a = 0; a < na; ++a)
          for (std::size_t y = 0; y < ny; ++y)
            acc += joint.prob(u, o, z, a, y);
    return acc;
  }
  double p_zo_marginal(std::size_t z, std::size_t o) const {
    double acc = 0.0;
    for (std::size_t u = 0; u < nu; ++u)
      for (std::size_t a = 0; a < na; ++a)
        for (std::size_t y = 0; y < ny; ++y)
          acc += joint.prob(u, o, z, a, y);
    return acc;
  }
  double p_zo_given_a(std::size_t z, std::size_t o, std::size_t a) const {
    double num = 0.0;
    for (std::size_t u = 0; u < nu; ++u)
      for (std::size_t y = 0; y < ny; ++y)
        num += joint.prob(u, o, z, a, y);
    return num / p_a_marginal(a);
  }
  double p_z_given_o(std::size_t z, std::size_t o) const {
    return p_zo_marginal(z, o) / p_o_marginal(o);
  }
  // M | O, A from the structural table (front-door graphs).
  double p_m_given_oa(std::size_t z, std::size_t o, std::size_t a) const {
    if (spec.graph == ToyGraph::frontdoor) {
      return spec.p_z[a * nz + z];
    }
    return spec.p_z[(a * no + o) * nz + z];
  }
  double p_u_given_a(std::size_t u, std::size_t a) const {
    double num = 0.0;
    for (std::size_t o = 0; o < no; ++o)
      for (std::size_t z = 0; z < nz; ++z)
        for (std::size_t y = 0; y < ny; ++y)
          num += joint.prob(u, o, z, a, y);
    return num / p_a_marginal(a);
  }
  double p_uo_given_a(std::size_t u, std::size_t o, std::size_t a) const {
    double num = 0.0;
    for (std::size_t z = 0; z < nz; ++z)
      for (std::size_t y = 0; y < ny; ++y)
        num += joint.prob(u, o, z, a, y);
    return num / p_a_marginal(a);
  }
  double p_u_given_o(std::size_t u, std::size_t o) const {
    return spec.p_uo[u * no + o] / p_o_marginal(o);
  }
  double expected_y(std::size_t y_row) const {
    double acc = 0.0;
    for (std::size_t y = 0; y < ny; ++y) {
      acc += spec.y_values[y] * spec.p_y[y_row * ny + y];
    }
    return acc;
  }
};

}  // namespace

double toy_ate(const ToyJoint& joint, std::size_t a_idx) {
  Laws laws(joint);
  const DiscreteToySpec& spec = joint.spec;
  double acc = 0.0;
  switch (spec.graph) {
    case ToyGraph::backdoor:
      for (std::size_t z = 0; z < laws.nz; ++z) {
        acc += laws.p_zo_marginal(z, 0) * joint.g2(a_idx, z);
      }
      return acc;
    case ToyGraph::frontdoor:
      for (std::size_t a2 = 0; a2 < laws.na; ++a2) {
        const double pa2 = laws.p_a_marginal(a2);
        double inner = 0.0;
        for (std::size_t z = 0; z < laws.nz; ++z) {
          inner += laws.p_m_given_oa(z, 0, a_idx) * joint.g2(a2, z);
        }
        acc += pa2 * inner;
      }
      return acc;
    case ToyGraph::obs_backdoor:
      for (std::size_t z = 0; z < laws.nz; ++z) {
        for (std::size_t o = 0; o < laws.no; ++o) {
          acc += laws.p_zo_marginal(z, o) * joint.g3(a_idx, o, z);
        }
      }
      return acc;
    case ToyGraph::obs_frontdoor:
      for (std::size_t a2 = 0; a2 < laws.na; ++a2) {
        const double pa2 = laws.p_a_marginal(a2);
        double outer = 0.0;
        for (std::size_t o = 0; o < laws.no; ++o) {
          const double po = laws.p_o_marginal(o);
          double inner = 0.0;
          for (std::size_t z = 0; z < laws.nz; ++z) {
            inner += laws.p_m_given_oa(z, o, a_idx) * joint.g3(a2, o, z);
          }
          outer += po * inner;
        }
        acc += pa2 * outer;
      }
      return acc;
  }
  return acc;
}

double toy_att(const ToyJoint& joint, std::size_t a_idx,
               std::size_t aprime_idx) {
  Laws laws(joint);
  const DiscreteToySpec& spec = joint.spec;
  double acc = 0.0;
  switch (spec.graph) {
    case ToyGraph::backdoor:
      for (std::size_t z = 0; z < laws.nz; ++z) {
        acc += laws.p_zo_given_a(z, 0, aprime_idx) * joint.g2(a_idx, z);
      }
      return acc;
    case ToyGraph::frontdoor:
      // theta_ATT(a; a') = E_M[g(a', M) | A = a].
      for (std::size_t z = 0; z < laws.nz; ++z) {
        acc += laws.p_m_given_oa(z, 0, a_idx) * joint.g2(aprime_idx, z);
      }
      return acc;
    case ToyGraph::obs_backdoor:
      for (std::size_t z = 0; z < laws.nz; ++z) {
        for (std::size_t o = 0; o < laws.no; ++o) {
          acc += laws.p_zo_given_a(z, o, aprime_idx) * joint.g3(a_idx, o, z);
        }
      }
      return acc;
    case ToyGraph::obs_frontdoor:
      for (std::size_t o = 0; o < laws.no; ++o) {
        const double po = laws.p_o_marginal(o);
        double inner = 0.0;
        for (std::size_t z = 0; z < laws.nz; ++z) {
          inner += laws.p_m_given_oa(z, o, a_idx) * joint.g3(aprime_idx, o, z);
        }
        acc += po * inner;
      }
      return acc;
  }
  return acc;
}

double toy_cate(const ToyJoint& joint, std::size_t a_idx, std::size_t o_idx) {
  Laws laws(joint);
  const DiscreteToySpec& spec = joint.spec;
  double acc = 0.0;
  switch (spec.graph) {
    case ToyGraph::obs_backdoor:
      for (std::size_t z = 0; z < laws.nz; ++z) {
        acc += laws.p_z_given_o(z, o_idx) * joint.g3(a_idx, o_idx, z);
      }
      return acc;
    case ToyGraph::obs_frontdoor:
      for (std::size_t a2 = 0; a2 < laws.na; ++a2) {
        const double pa2 = laws.p_a_marginal(a2);
        double inner = 0.0;
        for (std::size_t z = 0; z < laws.nz; ++z) {
          inner += laws.p_m_given_oa(z, o_idx, a_idx) *
                   joint.g3(a2, o_idx, z);
        }
        acc += pa2 * inner;
      }
      return acc;
    default:
      throw InvalidArgument("toy_cate: CATE needs an observable confounder");
  }
}

double toy_ate_structural(const ToyJoint& joint, std::size_t a_idx) {
  Laws laws(joint);
  const DiscreteToySpec& spec = joint.spec;
  double acc = 0.0;
  for (std::size_t u = 0; u < laws.nu; ++u) {
    for (std::size_t o = 0; o < laws.no; ++o) {
      const double puo = spec.p_uo[u * laws.no + o];
      double ey = 0.0;
      switch (spec.graph) {
        case ToyGraph::backdoor:
          ey = laws.expected_y(a_idx * laws.nu + u);
          break;
        case ToyGraph::obs_backdoor:
          ey = laws.expected_y((a_idx * laws.no + o) * laws.nu + u);
          break;
        case ToyGraph::frontdoor:
          for (std::size_t z = 0; z < laws.nz; ++z) {
            ey += spec.p_z[a_idx * laws.nz + z] *
                  laws.expected_y(z * laws.nu + u);
          }
          break;
        case ToyGraph::obs_frontdoor:
          for (std::size_t z = 0; z < laws.nz; ++z) {
            ey += spec.p_z[(a_idx * laws.no + o) * laws.nz + z] *
                  laws.expected_y((z * laws.no + o) * laws.nu + u);
          }
          break;
      }
      acc += puo * ey;
    }
  }
  return acc;
}

double toy_att_structural(const ToyJoint& joint, std::size_t a_idx,
                          std::size_t aprime_idx) {
  Laws laws(joint);
  const DiscreteToySpec& spec = joint.spec;
  double acc = 0.0;
  for (std::size_t u = 0; u < laws.nu; ++u) {
    for (std::size_t o = 0; o < laws.no; ++o) {
      const double puo = laws.p_uo_given_a(u, o, aprime_idx);
      double ey = 0.0;
      switch (spec.graph) {
        case ToyGraph::backdoor:
          ey = laws.expected_y(a_idx * laws.nu + u);
          break;
        case ToyGraph::obs_backdoor:
          ey = laws.expected_y((a_idx * laws.no + o) * laws.nu + u);
          break;
        case ToyGraph::frontdoor:
          for (std::size_t z = 0; z < laws.nz; ++z) {
            ey += spec.p_z[a_idx * laws.nz + z] *
                  laws.expected_y(z * laws.nu + u);
          }
          break;
        case ToyGraph::obs_frontdoor:
          for (std::size_t z = 0; z < laws.nz; ++z) {
            ey += spec.p_z[(a_idx * laws.no + o) * laws.nz + z] *
                  laws.expected_y((z * laws.no + o) * laws.nu + u);
          }
          break;
      }
      acc += puo * ey;
    }
  }
  return acc;
}

double toy_cate_structural(const ToyJoint& joint, std::size_t a_idx,
                           std::size_t o_idx) {
  Laws laws(joint);
  const DiscreteToySpec& spec = joint.spec;
  if (!spec.has_confounder()) {
    throw InvalidArgument("toy_cate: CATE needs an observable confounder");
  }
  double acc = 0.0;
  for (std::size_t u = 0; u < laws.nu; ++u) {
    const double pu = laws.p_u_given_o(u, o_idx);
    double ey = 0.0;
    if (spec.graph == ToyGraph::obs_backdoor) {
      ey = laws.expected_y((a_idx * laws.no + o_idx) * laws.nu + u);
    } else {
      for (std::size_t z = 0; z < laws.nz; ++z) {
        ey += spec.p_z[(a_idx * laws.no + o_idx) * laws.nz + z] *
              laws.expected_y((z * laws.no + o_idx) * laws.nu + u);
      }
    }
    acc += pu * ey;
  }
  return acc;
}

DiscreteToySpec random_toy_spec(ToyGraph graph, std::uint64_t seed) {
  PhiloxRng rng(seed, streams::kToySpec);
  DiscreteToySpec spec;
  spec.graph = graph;
  spec.u_values = {0.0, 1.0};
  spec.z_values = {0.0, 1.0};
  spec.a_values = {0.0, 1.0};
  spec.y_values = {0.0, 1.0};
  spec.o_values = spec.has_confounder() ? std::vector<double>{0.0, 1.0}
                                        : std::vector<double>{0.0};
  const std::size_t nu = 2;
  const std::size_t no = spec.o_values.size();
  const std::size_t nz = 2;
  const std::size_t na = 2;

  // Binary rows with the head probability in [0.15, 0.85].
  auto random_rows = [&rng](std::size_t rows) {
    std::vector<double> table(rows * 2);
    for (std::size_t r = 0; r < rows; ++r) {
      const double p = rng.uniform(0.15, 0.85);
      table[r * 2] = p;
      table[r * 2 + 1] = 1.0 - p;
    }
    return table;
  };
  // The (U, O) joint: normalized positive cell masses.
  std::vector<double> uo(nu * no);
  double total = 0.0;
  for (auto& cell : uo) {
    cell = rng.uniform(0.15, 0.85);
    total += cell;
  }
  double running = 0.0;
  for (std::size_t i = 0; i + 1 < uo.size(); ++i) {
    uo[i] /= total;
    running += uo[i];
  }
  uo.back() = 1.0 - running;  // rows must sum to 1 exactly
  spec.p_uo = std::move(uo);

  switch (graph) {
    case ToyGraph::backdoor:
      spec.p_z = random_rows(nu);
      spec.p_a = random_rows(nz);
      spec.p_y = random_rows(na * nu);
      break;
    case ToyGraph::frontdoor:
      spec.p_a = random_rows(nu);
      spec.p_z = random_rows(na);
      spec.p_y = random_rows(nz * nu);
      break;
    case ToyGraph::obs_backdoor:
      spec.p_z = random_rows(nu * no);
      spec.p_a = random_rows(nz * no);
      spec.p_y = random_rows(na * no * nu);
      break;
    case ToyGraph::obs_frontdoor:
      spec.p_a = random_rows(nu * no);
      spec.p_z = random_rows(na * no);
      spec.p_y = random_rows(nz * no * nu);
      break;
  }
  spec.validate();
  return spec;
}

}  // namespace causalembed::dgp
