#pragma once

#include <json.hpp>

#include "msm/dataio.hpp"
#include "msm/markovcheck.hpp"
#include "msm/msmprob.hpp"
#include "msm/regression.hpp"
#include "msm/survcore.hpp"

namespace msm::serialize {

using nlohmann::json;

// Non-finite numbers become null.
json number(double v);

json to_json(const survcore::SurvCurve& curve);
json to_json(const survcore::RankTestResult& r);
json to_json(const regression::CoxFit& fit);
json to_json(const regression::PhTestResult& r);
json to_json(const regression::AnovaTable& t);
json to_json(const regression::NonlinearityResult& r);
json to_json(const regression::AftFit& fit);
json to_json(const dataio::CountMatrix& m, const dataio::TransitionSystem& system);
json to_json(const msmprob::Flag& f);
json to_json(const std::vector<msmprob::Flag>& flags);
json to_json(const msmprob::TransitionFit& f);
// Curves for every reported (from, to) pair.
json to_json(const msmprob::TransitionMatrix& m, const dataio::TransitionSystem& system);
json to_json(const msmprob::CifResult& r);
json to_json(const markovcheck::LocalTestResult& r);
json to_json(const markovcheck::GlobalCoxResult& r);
json to_json(const markovcheck::GlobalAucResult& r);
json to_json(const markovcheck::GlobalLogrankResult& r);

// Two-character style label "hj" under the system's display offset.
std::string transition_label(const dataio::TransitionSystem& system, int from, int to);

}  // namespace msm::serialize
