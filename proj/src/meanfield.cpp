#include "vppsim/meanfield.hpp"

#include <cmath>
#include <stdexcept>

namespace vppsim {

MeanField MeanField::uniform(int n_states, int n_actions) {
  MeanField mf;
  mf.n_states = n_states;
  mf.n_actions = n_actions;
  mf.mass.assign(static_cast<size_t>(n_states) * n_actions,
                 1.0 / (static_cast<double>(n_states) * n_actions));
  return mf;
}

MeanField MeanField::point_mass(int n_states, int n_actions, int s, int a) {
  MeanField mf;
  mf.n_states = n_states;
  mf.n_actions = n_actions;
  mf.mass.assign(static_cast<size_t>(n_states) * n_actions, 0.0);
  mf.at(s, a) = 1.0;
  return mf;
}

double MeanField::sum() const {
  double s = 0.0;
  for (double v : mass) s += v;
  return s;
}

double MeanField::l1_distance(const MeanField& other) const {
  double d = 0.0;
  for (size_t i = 0; i < mass.size(); ++i) d += std::abs(mass[i] - other.mass[i]);
  return d;
}

namespace {

void check_shapes(const MeanField& mf, const Policy& policy, const TransitionModel& model) {
  if (mf.n_states != model.n_states() || mf.n_actions != model.n_actions() ||
      policy.n_states != model.n_states() || policy.n_actions != model.n_actions())
    throw std::invalid_argument("mean field / policy / model shape mismatch");
}

}  // namespace

MeanField consistency_update(const MeanField& mf, const Policy& policy,
                             const TransitionModel& model, double zeta,
                             KernelAction convention) {
  check_shapes(mf, policy, model);
  const MdpGrids& g = model.grids;
  const int E = g.storage.size();
  const int ND = g.nd.n_points;
  const int H = g.hours;
  const int A = g.n_actions();
  const int S = model.n_states();

  MeanField out;
  out.n_states = S;
  out.n_actions = A;
  out.mass.assign(static_cast<size_t>(S) * A, 0.0);

  const double noise = zeta / (static_cast<double>(S) * A);
  const double keep = 1.0 - zeta;
  const double kernel_uniform = model.zeta / static_cast<double>(E);

  // Output slices (h', a') are independent; the transported mass only needs
  // the source hour h = h' - 1 and, in the Incoming convention, the
  // policy-weighted state marginal of mf.
#pragma omp parallel for schedule(static)
  for (int slice = 0; slice < H * A; ++slice) {
    const int h_out = slice / A;
    const int a_in = slice % A;  // incoming action a'
    const int h_src = (h_out + H - 1) % H;
    std::vector<double> transported(E, 0.0);  // mass arriving at e'
    double total_src = 0.0;

    if (convention == KernelAction::Incoming) {
      for (int e = 0; e < E; ++e) {
        double m = 0.0;
        for (int nd = 0; nd < ND; ++nd) {
          const int s = g.state_index(e, nd, h_src);
          double lmarg = 0.0;
          for (int a = 0; a < A; ++a) lmarg += mf.at(s, a);
          m += lmarg * policy.at(s, a_in);
        }
        total_src += m;
        transported[model.e_next[e * A + a_in]] += (1.0 - model.zeta) * m;
      }
    } else {
      // Outgoing convention: the kernel consumes the old action a.
      for (int e = 0; e < E; ++e) {
        for (int nd = 0; nd < ND; ++nd) {
          const int s = g.state_index(e, nd, h_src);
          const double pi = policy.at(s, a_in);
          for (int a = 0; a < A; ++a) {
            const double m = mf.at(s, a) * pi;
            total_src += m;
            transported[model.e_next[e * A + a]] += (1.0 - model.zeta) * m;
          }
        }
      }
    }

    for (int e = 0; e < E; ++e) {
      const double p_e = transported[e] + kernel_uniform * total_src;
      for (int nd = 0; nd < ND; ++nd) {
        const int s_out = g.state_index(e, nd, h_out);
        out.at(s_out, a_in) = noise + keep * g.nd.probs[h_out][nd] * p_e;
      }
    }
  }
  return out;
}

MeanField consistency_update_ref(const MeanField& mf, const Policy& policy,
                                 const TransitionModel& model, double zeta,
                                 KernelAction convention) {
  check_shapes(mf, policy, model);
  const int S = model.n_states();
  const int A = model.n_actions();
  MeanField out;
  out.n_states = S;
  out.n_actions = A;
  out.mass.assign(static_cast<size_t>(S) * A, 0.0);
  const double noise = zeta / (static_cast<double>(S) * A);

  for (int s_out = 0; s_out < S; ++s_out) {
    for (int a_out = 0; a_out < A; ++a_out) {
      double acc = 0.0;
      for (int s = 0; s < S; ++s) {
        const double pi = policy.at(s, a_out);
        if (pi == 0.0) continue;
        for (int a = 0; a < A; ++a) {
          const double m = mf.at(s, a);
          if (m == 0.0) continue;
          const int kernel_action = convention == KernelAction::Incoming ? a_out : a;
          acc += m * model.prob(s_out, s, kernel_action) * pi;
        }
      }
      out.at(s_out, a_out) = noise + (1.0 - zeta) * acc;
    }
  }
  return out;
}

double meanfield_to_demand(const MeanField& mf, const TransitionModel& model,
                           const PopulationSpec& pop, double consumer_ratio_sum) {
  const MdpGrids& g = model.grids;
  double ratio = 0.0;
  for (int s = 0; s < model.n_states(); ++s) {
    const AgentState st = g.state(s);
    for (int a = 0; a < model.n_actions(); ++a) {
      const double m = mf.at(s, a);
      if (m == 0.0) continue;
      ratio += m * (efficiency_adjust(st.e, g.actions.levels[a], pop.efficiency) + st.nd);
    }
  }
  return pop.total_capacity * ratio + pop.consumer_ref_capacity * consumer_ratio_sum;
}

double aggregate_storage(const std::vector<double>& levels,
                         const std::vector<double>& capacities) {
  double energy = 0.0;
  double capacity = 0.0;
  for (size_t i = 0; i < levels.size(); ++i) {
    energy += levels[i] * capacities[i];
    capacity += capacities[i];
  }
  return capacity > 0.0 ? energy / capacity : 0.0;
}

}  // namespace vppsim
