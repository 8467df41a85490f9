// Exhaustive-enumeration oracles over empirical laws, for validating the
// trained estimators against the identification formulas applied to the same
// fitted regression. Everything here counts raw dataset rows; nothing is
// shared with the estimator implementations.
#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "causalembed/dataset.hpp"

namespace oracles {

using causalembed::ColumnarDataset;
using causalembed::Role;

inline bool same(double a, double b) { return a == b; }

// g(a, z) for two-variable graphs; argument order (a, z).
using G2 = std::function<double(double, double)>;
// g(a, o, z) for the observable-confounder graphs.
using G3 = std::function<double(double, double, double)>;

inline double count_where(const ColumnarDataset& data,
                          const std::function<bool(std::size_t)>& pred) {
  double count = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (pred(i)) count += 1.0;
  }
  return count;
}

// sum_z Phat(z) g(a, z)
inline double bd_ate(const ColumnarDataset& data, const G2& g, double a,
                     std::span<const double> z_support, Role z_role) {
  double acc = 0.0;
  for (double z : z_support) {
    const double pz = count_where(data, [&](std::size_t i) {
                        return same(data.row(z_role, i)[0], z);
                      }) /
                      static_cast<double>(data.n());
    acc += pz * g(a, z);
  }
  return acc;
}

// sum_z Phat(z | A = aprime) g(a, z)
inline double bd_att(const ColumnarDataset& data, const G2& g, double a,
                     double aprime, std::span<const double> z_support,
                     Role z_role) {
  const double n_ap = count_where(data, [&](std::size_t i) {
    return same(data.row(Role::treatment, i)[0], aprime);
  });
  double acc = 0.0;
  for (double z : z_support) {
    const double joint = count_where(data, [&](std::size_t i) {
      return same(data.row(Role::treatment, i)[0], aprime) &&
             same(data.row(z_role, i)[0], z);
    });
    acc += (joint / n_ap) * g(a, z);
  }
  return acc;
}

// sum_a2 Phat(a2) sum_m Phat(m | A = a) g(a2, m)
inline double fd_ate(const ColumnarDataset& data, const G2& g, double a,
                     std::span<const double> a_support,
                     std::span<const double> m_support) {
  double acc = 0.0;
  for (double a2 : a_support) {
    const double pa2 = count_where(data, [&](std::size_t i) {
                         return same(data.row(Role::treatment, i)[0], a2);
                       }) /
                       static_cast<double>(data.n());
    double inner = 0.0;
    const double n_a = count_where(data, [&](std::size_t i) {
      return same(data.row(Role::treatment, i)[0], a);
    });
    for (double m : m_support) {
      const double joint = count_where(data, [&](std::size_t i) {
        return same(data.row(Role::treatment, i)[0], a) &&
               same(data.row(Role::frontdoor, i)[0], m);
      });
      inner += (joint / n_a) * g(a2, m);
    }
    acc += pa2 * inner;
  }
  return acc;
}

// sum_m Phat(m | A = a) g(aprime, m)
inline double fd_att(const ColumnarDataset& data, const G2& g, double a,
                     double aprime, std::span<const double> m_support) {
  const double n_a = count_where(data, [&](std::size_t i) {
    return same(data.row(Role::treatment, i)[0], a);
  });
  double acc = 0.0;
  for (double m : m_support) {
    const double joint = count_where(data, [&](std::size_t i) {
      return same(data.row(Role::treatment, i)[0], a) &&
             same(data.row(Role::frontdoor, i)[0], m);
    });
    acc += (joint / n_a) * g(aprime, m);
  }
  return acc;
}

// sum_{x,o} Phat(x, o) g(a, o, x)
inline double obs_bd_ate(const ColumnarDataset& data, const G3& g, double a,
                         std::span<const double> o_support,
                         std::span<const double> x_support) {
  double acc = 0.0;
  for (double o : o_support) {
    for (double x : x_support) {
      const double p = count_where(data, [&](std::size_t i) {
                         return same(data.row(Role::confounder, i)[0], o) &&
                                same(data.row(Role::backdoor, i)[0], x);
                       }) /
                       static_cast<double>(data.n());
      acc += p * g(a, o, x);
    }
  }
  return acc;
}

// sum_{x,o} Phat(x, o | A = aprime) g(a, o, x)
inline double obs_bd_att(const ColumnarDataset& data, const G3& g, double a,
                         double aprime, std::span<const double> o_support,
                         std::span<const double> x_support) {
  const double n_ap = count_where(data, [&](std::size_t i) {
    return same(data.row(Role::treatment, i)[0], aprime);
  });
  double acc = 0.0;
  for (double o : o_support) {
    for (double x : x_support) {
      const double joint = count_where(data, [&](std::size_t i) {
        return same(data.row(Role::treatment, i)[0], aprime) &&
               same(data.row(Role::confounder, i)[0], o) &&
               same(data.row(Role::backdoor, i)[0], x);
      });
      acc += (joint / n_ap) * g(a, o, x);
    }
  }
  return acc;
}

// sum_x Phat(x | O = o) g(a, o, x)
inline double obs_bd_cate(const ColumnarDataset& data, const G3& g, double a,
                          double o, std::span<const double> x_support) {
  const double n_o = count_where(data, [&](std::size_t i) {
    return same(data.row(Role::confounder, i)[0], o);
  });
  double acc = 0.0;
  for (double x : x_support) {
    const double joint = count_where(data, [&](std::size_t i) {
      return same(data.row(Role::confounder, i)[0], o) &&
             same(data.row(Role::backdoor, i)[0], x);
    });
    acc += (joint / n_o) * g(a, o, x);
  }
  return acc;
}

// Phat(m | O = o, A = a)
inline double obs_p_m_given_oa(const ColumnarDataset& data, double m,
                               double o, double a) {
  const double n_oa = count_where(data, [&](std::size_t i) {
    return same(data.row(Role::confounder, i)[0], o) &&
           same(data.row(Role::treatment, i)[0], a);
  });
  const double joint = count_where(data, [&](std::size_t i) {
    return same(data.row(Role::confounder, i)[0], o) &&
           same(data.row(Role::treatment, i)[0], a) &&
           same(data.row(Role::frontdoor, i)[0], m);
  });
  return joint / n_oa;
}

// sum_a2 Phat(a2) sum_o Phat(o) sum_m Phat(m | o, a) g(a2, o, m)
inline double obs_fd_ate(const ColumnarDataset& data, const G3& g, double a,
                         std::span<const double> a_support,
                         std::span<const double> o_support,
                         std::span<const double> m_support) {
  double acc = 0.0;
  for (double a2 : a_support) {
    const double pa2 = count_where(data, [&](std::size_t i) {
                         return same(data.row(Role::treatment, i)[0], a2);
                       }) /
                       static_cast<double>(data.n());
    double outer = 0.0;
    for (double o : o_support) {
      const double po = count_where(data, [&](std::size_t i) {
                          return same(data.row(Role::confounder, i)[0], o);
                        }) /
                        static_cast<double>(data.n());
      double inner = 0.0;
      for (double m : m_support) {
        inner += obs_p_m_given_oa(data, m, o, a) * g(a2, o, m);
      }
      outer += po * inner;
    }
    acc += pa2 * outer;
  }
  return acc;
}

// sum_o Phat(o) sum_m Phat(m | o, a) g(aprime, o, m)
inline double obs_fd_att(const ColumnarDataset& data, const G3& g, double a,
                         double aprime, std::span<const double> o_support,
                         std::span<const double> m_support) {
  double acc = 0.0;
  for (double o : o_support) {
    const double po = count_where(data, [&](std::size_t i) {
                        return same(data.row(Role::confounder, i)[0], o);
                      }) /
                      static_cast<double>(data.n());
    double inner = 0.0;
    for (double m : m_support) {
      inner += obs_p_m_given_oa(data, m, o, a) * g(aprime, o, m);
    }
    acc += po * inner;
  }
  return acc;
}

// sum_a2 Phat(a2) sum_m Phat(m | o, a) g(a2, o, m)
inline double obs_fd_cate(const ColumnarDataset& data, const G3& g, double a,
                          double o, std::span<const double> a_support,
                          std::span<const double> m_support) {
  double acc = 0.0;
  for (double a2 : a_support) {
    const double pa2 = count_where(data, [&](std::size_t i) {
                         return same(data.row(Role::treatment, i)[0], a2);
                       }) /
                       static_cast<double>(data.n());
    double inner = 0.0;
    for (double m : m_support) {
      inner += obs_p_m_given_oa(data, m, o, a) * g(a2, o, m);
    }
    acc += pa2 * inner;
  }
  return acc;
}

}  // namespace oracles
