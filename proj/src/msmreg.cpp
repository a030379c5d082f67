#include <algorithm>

#include "msm/error.hpp"
#include "msm/msmprob.hpp"

namespace msm::msmprob {

ClockMode parse_clock(const std::string& name) {
  if (name == "markov" || name == "forward") return ClockMode::markov;
  if (name == "semi_markov" || name == "semi-markov" || name == "reset") return ClockMode::semi_markov;
  fail_validation("InvalidParameter", "clock must be markov or semi_markov", {{"clock", name}});
}

const char* to_string(ClockMode c) { return c == ClockMode::markov ? "markov" : "semi_markov"; }

regression::CoxData transition_cox_data(const dataio::LongFormatData& data, int transition,
                                        const std::vector<std::string>& covariates, ClockMode clock) {
  if (transition < 1 || transition > data.system.n_transitions()) {
    fail_validation("InvalidTransition", "no such transition", {{"transition", transition}});
  }
  std::vector<std::size_t> rows;
  std::vector<std::size_t> subjects;
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    if (data.rows[r].trans == transition) {
      rows.push_back(r);
      subjects.push_back(static_cast<std::size_t>(data.rows[r].subject));
    }
  }
  const auto frame = data.subjects.select_rows(subjects);
  regression::CoxData cd;
  cd.design = regression::build_design(frame, covariates);
  // design rows index into `rows`
  for (auto pos : cd.design.rows) {
    const auto& row = data.rows[rows[pos]];
    cd.start.push_back(clock == ClockMode::markov ? row.tstart : 0.0);
    cd.stop.push_back(clock == ClockMode::markov ? row.tstop : row.duration);
    cd.status.push_back(row.status);
  }
  return cd;
}

std::vector<TransitionFit> per_transition_cox(const dataio::LongFormatData& data,
                                              const std::vector<std::string>& covariates, ClockMode clock,
                                              regression::Ties ties, std::optional<int> only) {
  std::vector<TransitionFit> out;
  for (int k = 1; k <= data.system.n_transitions(); ++k) {
    if (only && *only != k) continue;
    TransitionFit tf;
    tf.transition = k;
    std::tie(tf.from, tf.to) = data.system.endpoints(k);
    const auto cd = transition_cox_data(data, k, covariates, clock);
    tf.n_rows = cd.n();
    tf.n_events = static_cast<std::size_t>(std::count(cd.status.begin(), cd.status.end(), 1));
    if (tf.n_events == 0) {
      tf.error = Flag{"NoEvents", "no observed transitions " + std::to_string(tf.from) + "->" + std::to_string(tf.to)};
      out.push_back(std::move(tf));
      continue;
    }
    try {
      tf.fit = regression::fit_cox(cd, {ties});
    } catch (const Error& e) {
      tf.error = Flag{e.code(), e.what()};
      out.push_back(std::move(tf));
      continue;
    }
    if (cd.design.p() > 0) {
      try {
        tf.ph = regression::ph_test(cd, *tf.fit);
      } catch (const Error&) {
        // the proportional hazards test is optional output
      }
    }
    out.push_back(std::move(tf));
  }
  if (only && out.empty()) fail_validation("InvalidTransition", "no such transition", {{"transition", *only}});
  return out;
}

}  // namespace msm::msmprob
