#include <cstdio>

#include "windcast/harness.hpp"

namespace windcast {
namespace {

constexpr std::array<Split, 3> kSplits{Split::train, Split::validation, Split::test};

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::json counts_json(const SplitCounts& c) {
  return {{"train", c.train}, {"validation", c.validation}, {"test", c.test}};
}

std::string display_name(const std::string& name) {
  std::string out = name;
  for (auto& ch : out) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return out;
}

const ModelReport* find(const ComparisonReport& r, std::string_view name) {
  for (const auto& m : r.models)
    if (m.name == name) return &m;
  return nullptr;
}

}  // namespace

nlohmann::json to_json(const ComparisonReport& r) {
  nlohmann::json models = nlohmann::json::object();
  nlohmann::json timing{{"total_seconds", r.total_seconds}};
  for (const auto& m : r.models) {
    nlohmann::json metrics = nlohmann::json::object();
    for (Split s : kSplits) {
      const auto& em = m.metrics[static_cast<std::size_t>(s)];
      metrics[std::string(to_string(s))] = em ? to_json(*em) : nlohmann::json(nullptr);
    }
    models[m.name] = {{"metrics", metrics},
                      {"rows", counts_json(m.rows)},
                      {"split_hash", hex(m.split_hash)},
                      {"epochs_run", m.epochs_run},
                      {"best_epoch", m.best_epoch},
                      {"stopped_early", m.stopped_early}};
    timing[m.name + "_train_seconds"] = m.train_seconds;
  }
  return {{"format_version", kReportFormatVersion},
          {"units", {{"mse", "(m/s)^2"}, {"r", "dimensionless"}}},
          {"comparison",
           "both models are trained on the same scaled rows and scored on identical split assignments; "
           "rows inside the NARX delay warm-up of each segment are excluded for both"},
          {"config", r.config},
          {"ingest", to_json(r.ingest)},
          {"dataset", {{"rows", r.dataset_rows}, {"split", counts_json(r.dataset_split)}}},
          {"models", models},
          {"timing", timing}};
}

std::string render_text(const ComparisonReport& r) {
  std::string out;
  char line[128];
  out += "Wind speed forecast, 3 h ahead\n";
  out += "==============================\n";
  std::snprintf(line, sizeof line, "%-6s %-10s %6s %12s %8s\n", "model", "split", "rows", "MSE", "R");
  out += line;
  std::snprintf(line, sizeof line, "%-6s %-10s %6s %12s %8s\n", "------", "----------", "------", "------------",
                "--------");
  out += line;
  for (const auto& m : r.models) {
    for (Split s : kSplits) {
      const auto& em = m.metrics[static_cast<std::size_t>(s)];
      const std::string name = display_name(m.name);
      const std::string split(to_string(s));
      if (!em) {
        std::snprintf(line, sizeof line, "%-6s %-10s %6s %12s %8s\n", name.c_str(), split.c_str(), "-", "-", "-");
      } else if (!em->r) {
        std::snprintf(line, sizeof line, "%-6s %-10s %6zu %12.5f %8s\n", name.c_str(), split.c_str(), em->n, em->mse,
                      "-");
      } else {
        std::snprintf(line, sizeof line, "%-6s %-10s %6zu %12.5f %8.4f\n", name.c_str(), split.c_str(), em->n,
                      em->mse, *em->r);
      }
      out += line;
    }
  }
  out += "\nMSE in (m/s)^2, R is the Pearson regression coefficient.\n";

  const auto* narx = find(r, "narx");
  const auto* anfis = find(r, "anfis");
  const auto test = static_cast<std::size_t>(Split::test);
  if (narx && anfis && narx->metrics[test] && anfis->metrics[test]) {
    const double a = anfis->metrics[test]->mse;
    const double n = narx->metrics[test]->mse;
    out += "Lower test MSE: ";
    out += a < n ? "ANFIS" : n < a ? "NARX" : "tie";
    out += "\n";
  } else {
    out += "Lower test MSE: n/a\n";
  }
  return out;
}

}  // namespace windcast
