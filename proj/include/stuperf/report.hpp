#pragma once

#include <string>
#include <vector>

#include "stuperf/transfer_pipeline.hpp"

namespace stuperf {

struct RunConfig {
    ExperimentPlan plan;
    std::string output_dir = "out";
    std::vector<std::string> formats = {"csv", "md"};  // csv | md | svg
    bool emit_pca_scatter = true;
    bool emit_loss_curves = true;

    bool wants(const std::string& format) const;
};

/// Flat key=value config file; '#' comments and blank lines allowed.
/// Unknown keys are hard errors.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// No-transfer and transfer tables plus a seed-level summary. Markdown
/// values are rounded to 2 decimals, CSV keeps full precision.
void render_tables(const std::vector<ExperimentResult>& results, const RunConfig& config);

/// Two-column (epoch, mae) CSV with the best epoch in a trailing comment.
void render_loss_curve(const LossHistory& history, const std::string& path);

/// (real, predicted) CSV; pairs with an SVG that draws the y=x reference.
void render_scatter(const std::vector<double>& y, const std::vector<double>& yhat,
                    const std::string& path);

void render_wcss_curve(const WcssCurve& curve, const std::string& path);

void render_loss_curve_svg(const LossHistory& history, const std::string& path);
void render_scatter_svg(const std::vector<double>& y, const std::vector<double>& yhat,
                        const std::string& path);
void render_pca_scatter_svg(const Matrix& coords, const std::vector<std::size_t>& labels,
                            const std::string& path);

/// Serialized per-seed reports + summary, consumed by the `report` command.
std::string results_to_json(const std::vector<ExperimentResult>& results);
void render_tables_from_json(const std::string& json_text, const RunConfig& config);

}  // namespace stuperf
