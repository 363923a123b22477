// Apache License, Version 2.0, refer to LICENSE.txt
#ifndef INFOCRIT_IO_HPP
#define INFOCRIT_IO_HPP

#include <string>
#include <vector>

#include "infocrit/criteria.hpp"
#include "infocrit/diagnostics.hpp"
#include "infocrit/models.hpp"
#include "infocrit/sampler.hpp"

namespace infocrit {

// Write via a temp file in the same directory, then rename into place.
void atomic_write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// --- pointwise log-likelihood matrices -----------------------------------
// Long form: header "draw,chain,j,loglik", draw and j are 1-based.
// Wide form: header "j1,...,jJ", one row per draw, no chain information.
void write_pointwise_csv_long(const std::string& path, const PointwiseLogLik& ll);
void write_pointwise_csv_wide(const std::string& path, const PointwiseLogLik& ll);
// Accepts either layout, detected from the header row.
PointwiseLogLik read_pointwise_csv(const std::string& path);

// CmdStan-style draws: '#' comment lines, one header row naming columns,
// pointwise contributions in "log_lik.1".."log_lik.J" (or log_lik[j]).
// Each file contributes one chain.
PointwiseLogLik ingest_cmdstan_csv(const std::vector<std::string>& paths);

// --- datasets --------------------------------------------------------------
// FA: wide CSV "y1..yn", one row per cluster. GMM: long CSV
// "cluster,occasion,t,y". Provenance goes to a JSON sidecar.
void write_dataset(const std::string& csv_path, const std::string& meta_path,
                   const Dataset& data);
Dataset read_dataset(const std::string& csv_path, const std::string& meta_path);

// --- sampler output ----------------------------------------------------------
// Draws CSV: header "draw,chain,<param...>,lp__,loglik__", constrained scale.
void write_draws_csv(const std::string& path, const ChainSet& chains,
                     const std::vector<std::string>& param_names);

struct DrawsTable {
  std::vector<std::string> names;                // parameter columns
  std::vector<Eigen::MatrixXd> chains;           // per chain: draws x params
};
DrawsTable read_draws_csv(const std::string& path);

// --- reports ----------------------------------------------------------------
std::string criteria_report_to_json(const CriteriaReport& report);
CriteriaReport criteria_report_from_json(const std::string& text);

std::string rhat_report_to_json(const RhatReport& report);
std::string switch_report_to_json(const SwitchReport& report);

std::string format_rhat_table(const RhatReport& report);

}  // namespace infocrit

#endif
