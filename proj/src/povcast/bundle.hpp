#pragma once

#include "povcast/gibbs.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace povcast {

// Sample bundle layout, one CSV per draw family:
//   hyper.csv        draw,mu_lambda,sigma_lambda,mu_tau,sigma_tau,mu_beta,sigma_beta
//   latents.csv      draw,entity,lambda,tau,beta
//   pred_next.csv    draw,<entity names...>   (period d + 1)
//   pred_next2.csv   draw,<entity names...>   (period d + 2)
//   diagnostics.csv  entity,lambda_repeat,tau_repeat,beta_repeat
// Reals use shortest round-trip formatting, so read(write(s)) == s exactly.
// observed_periods, grid bounds and warnings live in the manifest.

inline const std::vector<std::string> kSampleFiles{"hyper.csv", "latents.csv", "pred_next.csv",
                                                   "pred_next2.csv", "diagnostics.csv"};

/// Writes the CSV files and returns their names.
std::vector<std::string> write_sample_files(const PosteriorSamples& samples,
                                            const std::filesystem::path& dir);

/// Reads the CSV files; the caller supplies the fields kept in the manifest.
PosteriorSamples read_sample_files(const std::filesystem::path& dir, std::size_t observed_periods);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

} // namespace povcast
