#include "bsup/report.hpp"

#include <cmath>
#include <cstdio>

namespace bsup {

Json json_number(double value) {
  if (std::isnan(value)) return nullptr;
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return value;
}

Json json_number(const std::optional<double>& value) {
  return value ? json_number(*value) : Json(nullptr);
}

std::string csv_number(double value) {
  if (std::isnan(value)) return "";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

std::string csv_number(const std::optional<double>& value) { return value ? csv_number(*value) : ""; }

std::string metrics_csv_header() { return "mae,mse,psnr,ssim,ms_ssim,ms_ssim_loss,combined_loss"; }

std::string metrics_csv_row(const ImageMetricsReport& r) {
  return csv_number(r.mae) + "," + csv_number(r.mse) + "," + csv_number(r.psnr) + "," + csv_number(r.ssim) + "," +
         csv_number(r.ms_ssim) + "," + csv_number(r.ms_ssim_loss) + "," + csv_number(r.combined_loss);
}

Json to_json(const ImageMetricsReport& r) {
  Json j;
  j["mae"] = json_number(r.mae);
  j["mse"] = json_number(r.mse);
  j["psnr"] = json_number(r.psnr);
  j["ssim"] = json_number(r.ssim);
  j["ms_ssim"] = json_number(r.ms_ssim);
  j["ms_ssim_loss"] = json_number(r.ms_ssim_loss);
  j["combined_loss"] = json_number(r.combined_loss);
  return j;
}

Json to_json(const ConfusionMetrics& m) {
  Json j;
  j["accuracy"] = json_number(m.accuracy);
  j["sensitivity"] = json_number(m.sensitivity);
  j["specificity"] = json_number(m.specificity);
  j["precision"] = json_number(m.precision);
  j["f_measure"] = json_number(m.f_measure);
  j["mcc"] = json_number(m.mcc);
  return j;
}

}  // namespace bsup
