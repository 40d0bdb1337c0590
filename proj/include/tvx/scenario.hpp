#pragma once

// Scenario files (JSON with a version field), the analysis runner, corpus
// batches and the Hilbert-cube scaling table.

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tvx/lagrange.hpp"
#include "tvx/transversality.hpp"

namespace tvx {

using Json = nlohmann::json;

inline constexpr int kScenarioVersion = 1;
inline constexpr int kReportFormat = 1;

const std::vector<std::string>& analysis_names();

struct AnalysisRequest {
  std::string name;
  Json params = Json::object();
};

struct ProblemSpec {
  PolyFunction objective;
  SetSpec constraint;
  Vec x0;
};

struct QualificationSpec {
  PolyFunction f1;
  PolyFunction f2;
  Vec x0;
};

struct Scenario {
  std::string id;
  std::string description;
  std::uint64_t seed = 0;
  int budget = 0;  // sampled pairs per estimator; 0 keeps the defaults
  std::optional<double> tol;
  std::optional<SetSpec> A;
  std::optional<SetSpec> B;
  std::optional<Vec> point;
  std::optional<ProblemSpec> problem;
  std::optional<QualificationSpec> qualification;
  std::vector<AnalysisRequest> analyses;
};

/// Error(Parse) with line:column for malformed text or unknown tags;
/// Error(Configuration) for unknown analyses and bad budgets.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");
Scenario load_scenario(const std::filesystem::path& path);

Json set_to_json(const SetSpec& S);
SetSpec set_from_json(const Json& j);
Json poly_to_json(const PolyFunction& f);
PolyFunction poly_from_json(const Json& j);
/// Canonical form; serialize(parse(text)) is a fixed point.
Json scenario_to_json(const Scenario& s);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> budget;
  std::optional<double> tol;
  int format = kReportFormat;
};

struct Attachment {
  std::string name;
  std::string content;
};

struct Report {
  Json doc;
  int discrepancies = 0;
  int failures = 0;  // analyses that raised an error
  std::vector<Attachment> attachments;
  std::string text() const;  // stable serialization, newline-terminated
};

Report run_scenario(const Scenario& s, const RunOptions& opt = {});
/// Writes <id>.report.json plus attachments into dir via temp-file rename.
void write_report(const Report& r, const std::string& id, const std::filesystem::path& dir);

struct CorpusRow {
  std::string file;
  std::string id;
  std::string verdicts;  // analysis=STATUS;...
  int discrepancies = 0;
  std::string error;
};

struct CorpusSummary {
  std::vector<CorpusRow> rows;
  int discrepancies = 0;
  std::string table() const;
};

CorpusSummary run_corpus(const std::filesystem::path& dir, const std::filesystem::path& out, const RunOptions& opt = {},
                         int workers = 1);

// ---------------------------------------------------------------------------

struct ChainResult {
  TransversalityCertificate kruger;
  TangentialConstants tangential;
  SubtransversalConstants sub;
  bool tangential_valid = false;
  int pairs_checked = 0;
  double max_ratio = 0.0;  // largest sampled subtransversality ratio within zeta
  bool sub_bounded = false;  // max_ratio <= 1.05 K
};

/// Kruger certificate, transferred tangential constants validated on sampled
/// pairs, and the transferred K checked against sampled ratios.
ChainResult implication_chain(const SetSpec& A, const SetSpec& B, const Vec& x0, double alpha, double delta,
                              const SamplingOptions& sampling = {});

struct HilbertRow {
  int n = 0;
  double K = 0.0;
  double K_shell = 0.0;  // shell estimator alone
  double K_ray = 0.0;    // ray probes past the exit point of the cube
  std::string status;
};

/// Cube |x_i| <= 1/i against the ray along (i^{-3/4}) in R^n, n = 1..nmax.
std::vector<HilbertRow> hilbert_cube_scaling(int nmax, const SamplingOptions& sampling = {});
std::string hilbert_csv(const std::vector<HilbertRow>& rows);

}  // namespace tvx
