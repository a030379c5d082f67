#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "msm/dataio.hpp"

namespace msm::regression {

// ---- design matrices ----

struct Term {
  std::string name;
  std::vector<std::size_t> columns;  // design columns produced by this covariate
  bool categorical = false;
  std::vector<std::string> levels;   // categorical: all levels, first is the reference
};

// Column-major n x p model matrix built from named covariates. Categorical
// covariates are dummy coded against their first level ("term=level").
struct Design {
  std::size_t n = 0;
  std::vector<double> x;
  std::vector<std::string> names;
  std::vector<Term> terms;
  std::vector<std::size_t> rows;  // source rows in the dataset, after dropping missing covariates

  std::size_t p() const { return names.size(); }
  std::span<const double> col(std::size_t k) const { return {x.data() + k * n, n}; }
  double at(std::size_t i, std::size_t k) const { return x[k * n + i]; }
  void append_column(std::string name, std::span<const double> values);
};

// Rows of `data` listed in `rows` (all rows when empty) that have every
// covariate present.
Design build_design(const dataio::Dataset& data, const std::vector<std::string>& covariates,
                    std::span<const std::size_t> rows = {});

// Maps a covariate profile (name -> numeric value or level label) onto the
// columns of a design built from the same covariates.
Eigen::VectorXd encode_profile(const Design& design, const std::map<std::string, std::string>& profile);

// ---- Cox proportional hazards ----

enum class Ties { efron, breslow };
Ties parse_ties(const std::string& name);
const char* to_string(Ties ties);

struct CoxData {
  std::vector<double> start;
  std::vector<double> stop;
  std::vector<int> status;
  Design design;

  std::size_t n() const { return stop.size(); }
};

struct TestStat {
  double statistic = 0.0;
  int df = 0;
  double p = 1.0;
};

struct CoxOptions {
  Ties ties = Ties::efron;
  int max_iter = 25;
  double eps = 1e-9;
};

struct CoxFit {
  std::vector<std::string> names;
  std::vector<Term> terms;
  Eigen::VectorXd coef;
  Eigen::VectorXd hr;
  Eigen::VectorXd se;
  Eigen::VectorXd z;
  Eigen::VectorXd p;
  Eigen::MatrixXd cov;
  double loglik_null = 0.0;
  double loglik_final = 0.0;
  TestStat lr, wald, score;
  Ties ties = Ties::efron;
  std::size_t n = 0;
  std::size_t n_events = 0;
  bool converged = false;
  int iterations = 0;
  std::vector<char> infinite_coef;
  Eigen::VectorXd means;  // covariate centring used internally

  bool any_infinite() const;
};

struct CoxEval {
  double loglik = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd info;
};

// Log partial likelihood over (start, stop] risk sets, with score and
// observed information. Covariates are used as given (no centring).
CoxEval cox_evaluate(const CoxData& data, Ties ties, const Eigen::VectorXd& beta, bool want_info = true);

// Per distinct event time: the score contribution (sum of x over deaths minus
// tie-corrected risk-set means) and the information contribution.
struct EventTimeTerm {
  double time = 0.0;
  int deaths = 0;
  Eigen::VectorXd score;
  Eigen::MatrixXd info;
};
std::vector<EventTimeTerm> cox_event_terms(const CoxData& data, Ties ties, const Eigen::VectorXd& beta);

CoxFit fit_cox(const CoxData& data, const CoxOptions& options = {});

// Breslow cumulative-baseline-hazard increments d_k(u) / sum_risk exp(x'beta)
// at each distinct event time, with x on its original scale.
struct HazardIncrements {
  std::vector<double> times;
  std::vector<double> increments;
};
HazardIncrements breslow_increments(const CoxData& data, const Eigen::VectorXd& beta);

// ---- Cox diagnostics ----

enum class TimeTransform { km, identity, log };
TimeTransform parse_time_transform(const std::string& name);
const char* to_string(TimeTransform t);

struct PhRow {
  std::string term;
  double chi_squared = 0.0;
  int df = 0;
  double p = 1.0;
};

struct PhTestResult {
  std::vector<PhRow> rows;  // per term, then GLOBAL
  TimeTransform transform = TimeTransform::km;
};

PhTestResult ph_test(const CoxData& data, const CoxFit& fit, TimeTransform transform = TimeTransform::km);

struct AnovaRow {
  std::string term;
  double loglik = 0.0;
  double chi_squared = 0.0;
  int df = 0;
  double p = 1.0;
};

struct AnovaTable {
  double loglik_null = 0.0;
  std::size_t n = 0;
  std::vector<AnovaRow> rows;
};

// Times and statuses for a set of dataset rows plus the covariates to add in order.
struct SurvivalFrame {
  std::vector<double> start;
  std::vector<double> stop;
  std::vector<int> status;
  const dataio::Dataset* data = nullptr;  // one row per observation
};

CoxData make_cox_data(const SurvivalFrame& frame, const std::vector<std::string>& covariates);

AnovaTable anova_sequential(const SurvivalFrame& frame, const std::vector<std::string>& terms,
                            Ties ties = Ties::efron);

struct NonlinearityResult {
  std::string covariate;
  double loglik_linear = 0.0;
  double loglik_spline = 0.0;
  double chi_squared = 0.0;
  int df = 0;
  double p = 1.0;
  std::vector<double> knots;
};

// Restricted cubic spline basis (Harrell's parameterisation, k knots -> k-2
// nonlinear columns, each scaled by (t_k - t_1)^2).
std::vector<std::vector<double>> rcs_basis(std::span<const double> x, std::span<const double> knots);

NonlinearityResult nonlinearity_test(const SurvivalFrame& frame, const std::string& covariate,
                                     const std::vector<std::string>& adjust = {}, Ties ties = Ties::efron);

// ---- parametric AFT ----

enum class AftDistribution { exponential, weibull, gaussian, logistic, lognormal, loglogistic };
AftDistribution parse_distribution(const std::string& name);
const char* to_string(AftDistribution d);
bool log_transformed(AftDistribution d);

struct AftFit {
  AftDistribution distribution = AftDistribution::weibull;
  std::vector<std::string> names;  // "(Intercept)" first
  Eigen::VectorXd coef;
  Eigen::VectorXd se;
  Eigen::VectorXd z;
  Eigen::VectorXd p;
  double log_scale = 0.0;
  double scale = 1.0;
  double log_scale_se = 0.0;
  double loglik = 0.0;
  int n_params = 0;
  double aic = 0.0;
  std::size_t n = 0;
  std::size_t n_events = 0;
  bool converged = false;
  int iterations = 0;
  Eigen::MatrixXd cov;  // (beta, log sigma)
};

struct AftData {
  std::vector<double> time;
  std::vector<int> status;
  Design design;  // without intercept
};

struct AftOptions {
  int max_iter = 50;
  double eps = 1e-9;
  std::optional<double> fixed_scale;  // holds sigma fixed (exponential uses 1)
};

// Censored log-likelihood (time scale, including the Jacobian of the log
// transform for log-location families) and its gradient in (beta, log sigma).
struct AftEval {
  double loglik = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};
AftEval aft_evaluate(const AftData& data, AftDistribution dist, const Eigen::VectorXd& beta, double log_scale,
                     bool want_hessian = true);

AftFit fit_aft(const AftData& data, AftDistribution dist, const AftOptions& options = {});

// ---- logistic regression (presmoothing) ----

struct LogisticFit {
  Eigen::VectorXd coef;  // intercept first
  bool converged = false;
  bool separated = false;
  int iterations = 0;
};

LogisticFit fit_logistic(std::span<const double> x, std::span<const double> y, int max_iter = 50, double eps = 1e-10);

}  // namespace msm::regression
