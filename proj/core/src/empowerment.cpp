#include "imrl/empowerment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "imrl/errors.hpp"

namespace imrl::empower {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void Channel::validate() const {
    if (n_actions < 1 || n_outcomes < 1) throw InvalidInput("Channel: empty channel");
    if (p.size() != static_cast<std::size_t>(n_actions) * n_outcomes) {
        throw InvalidInput("Channel: matrix size mismatch");
    }
    for (int a = 0; a < n_actions; ++a) {
        double sum = 0.0;
        for (int j = 0; j < n_outcomes; ++j) {
            if (at(a, j) < 0.0) throw InvalidInput("Channel: negative entry");
            sum += at(a, j);
        }
        if (std::abs(sum - 1.0) > 1e-12) throw InvalidInput("Channel: row not stochastic");
    }
}

Channel Channel::from_mdp_state(const env::DiscreteMDP& mdp, int state) {
    Channel ch;
    ch.n_actions = mdp.n_actions;
    ch.n_outcomes = mdp.n_states;
    ch.p.resize(static_cast<std::size_t>(mdp.n_actions) * mdp.n_states);
    for (int a = 0; a < mdp.n_actions; ++a) {
        for (int s2 = 0; s2 < mdp.n_states; ++s2) {
            ch.p[static_cast<std::size_t>(a) * mdp.n_states + s2] = mdp.prob(state, a, s2);
        }
    }
    return ch;
}

EmpowermentResult blahut_arimoto(const Channel& channel, double tol, int max_iter,
                                 std::vector<double>* capacity_trace) {
    channel.validate();
    if (tol <= 0.0) throw InvalidInput("blahut_arimoto: tol must be positive");
    const int na = channel.n_actions;
    const int no = channel.n_outcomes;

    std::vector<double> policy(na, 1.0 / static_cast<double>(na));
    std::vector<double> marginal(no);
    std::vector<double> divergence(na);

    EmpowermentResult result;
    double previous = 0.0;
    bool have_previous = false;
    for (int iter = 0; iter < max_iter; ++iter) {
        // Output marginal of the current policy; the posterior p(a|s') it
        // induces is policy[a] * p(s'|a) / marginal[s'].
        for (int j = 0; j < no; ++j) {
            double m = 0.0;
            for (int a = 0; a < na; ++a) m += policy[a] * channel.at(a, j);
            marginal[j] = m;
        }
        double capacity = 0.0;
        double max_div = 0.0;
        for (int a = 0; a < na; ++a) {
            double d = 0.0;
            for (int j = 0; j < no; ++j) {
                const double q = channel.at(a, j);
                if (q > 0.0) d += q * std::log(q / marginal[j]);
            }
            divergence[a] = d;
            capacity += policy[a] * d;
            max_div = std::max(max_div, d);
        }
        capacity = std::max(capacity, 0.0);
        if (capacity_trace != nullptr) capacity_trace->push_back(capacity);

        result.capacity = capacity;
        result.policy = policy;
        result.iterations = iter + 1;
        if (have_previous && std::abs(capacity - previous) < tol) return result;
        previous = capacity;
        have_previous = true;

        double z = 0.0;
        for (int a = 0; a < na; ++a) {
            policy[a] *= std::exp(divergence[a] - max_div);
            z += policy[a];
        }
        for (int a = 0; a < na; ++a) policy[a] /= z;
    }
    throw ConvergenceError("blahut_arimoto: capacity did not converge in " +
                               std::to_string(max_iter) + " iterations",
                           result);
}

std::vector<double> exact_empowerment_map(const env::DiscreteMDP& mdp, double tol, int max_iter) {
    mdp.validate();
    std::vector<double> out(mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) {
        out[s] = blahut_arimoto(Channel::from_mdp_state(mdp, s), tol, max_iter).capacity;
    }
    return out;
}

std::vector<double> rank_with_ties(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw InvalidInput("spearman: need two equally sized samples");
    }
    const std::vector<double> rx = rank_with_ties(x);
    const std::vector<double> ry = rank_with_ties(y);
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += rx[i] / n;
        my += ry[i] / n;
    }
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = rx[i] - mx;
        const double dy = ry[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw UndefinedCorrelation("spearman: zero rank variance");
    }
    return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------

EmbeddedMdpEnv::EmbeddedMdpEnv(env::DiscreteMDP mdp, int episode_length, std::uint64_t run_seed)
    : mdp_(std::move(mdp)), episode_length_(episode_length), rng_(run_seed, "env") {
    mdp_.validate();
    if (episode_length_ < 1) throw InvalidInput("EmbeddedMdpEnv: episode_length must be >= 1");
    reset();
}

env::FactoredState EmbeddedMdpEnv::encode(int discrete_state) const {
    env::FactoredState s;
    s.interest_obs.assign(mdp_.n_states, 0.0);
    s.interest_obs[discrete_state] = 1.0;
    return s;
}

const env::FactoredState& EmbeddedMdpEnv::reset() {
    discrete_ = static_cast<int>(rng_.below(static_cast<std::uint64_t>(mdp_.n_states)));
    state_ = encode(discrete_);
    steps_ = 0;
    return state_;
}

int EmbeddedMdpEnv::discretize(std::span<const double> action) const {
    if (action.size() != 2) throw InvalidInput("EmbeddedMdpEnv: action must be 2-d");
    const double angle = std::atan2(action[1], action[0]); // (-pi, pi]
    const double t = (angle + kPi) / (2.0 * kPi);
    const int sector = static_cast<int>(t * mdp_.n_actions);
    return std::clamp(sector, 0, mdp_.n_actions - 1);
}

env::StepOutcome EmbeddedMdpEnv::step(std::span<const double> action) {
    const int a = discretize(action);
    const double u = rng_.uniform();
    double cum = 0.0;
    int next = mdp_.n_states - 1;
    for (int s2 = 0; s2 < mdp_.n_states; ++s2) {
        cum += mdp_.prob(discrete_, a, s2);
        if (u < cum) {
            next = s2;
            break;
        }
    }
    discrete_ = next;
    state_ = encode(discrete_);
    steps_ += 1;

    env::StepOutcome out;
    out.next_state = state_;
    out.reward = 0.0;
    out.done = steps_ >= episode_length_;
    out.info = env::StepInfo{a, 0.0};
    return out;
}

CorrelationReport estimator_correlation(const agent::AgentState& agent_state,
                                        const EmbeddedMdpEnv& embedded, int n_samples,
                                        RngStream& rng) {
    if (n_samples < 1) throw InvalidInput("estimator_correlation: n_samples must be >= 1");
    const env::DiscreteMDP& mdp = embedded.mdp();
    const std::vector<double> exact = exact_empowerment_map(mdp);

    CorrelationReport report;
    std::vector<double> means(mdp.n_states, 0.0);
    for (int s = 0; s < mdp.n_states; ++s) {
        const std::vector<double> flat = embedded.encode(s).flatten();
        double acc = 0.0;
        for (int k = 0; k < n_samples; ++k) {
            const nn::SquashedGaussianHead head = agent_state.policy_head(flat);
            std::vector<double> noise(agent_state.action_dim);
            for (double& z : noise) z = rng.normal();
            const nn::SquashedSample samp = nn::sample_squashed(head, noise);

            const int a = embedded.discretize(samp.action);
            const double u = rng.uniform();
            double cum = 0.0;
            int s2 = mdp.n_states - 1;
            for (int cand = 0; cand < mdp.n_states; ++cand) {
                cum += mdp.prob(s, a, cand);
                if (u < cum) {
                    s2 = cand;
                    break;
                }
            }
            const std::vector<double> flat2 = embedded.encode(s2).flatten();
            acc += agent::intrinsic_g(agent_state, flat, samp.action, flat2);
        }
        means[s] = acc / static_cast<double>(n_samples);
        report.rows.push_back(StateCorrelation{s, exact[s], means[s]});
    }
    report.rho = spearman(means, exact);
    return report;
}

} // namespace imrl::empower
