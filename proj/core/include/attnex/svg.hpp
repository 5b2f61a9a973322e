#pragma once

#include <string>
#include <vector>

namespace attnex {

/// Minimal SVG document builder (lines, rects, circles, polylines, text).
/// Deliberately small so reports do not depend on a plotting stack.
class SvgDocument {
 public:
  SvgDocument(double width, double height);

  void line(double x1, double y1, double x2, double y2,
            const std::string& stroke = "#333", double stroke_width = 1.0);
  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "none");
  void circle(double cx, double cy, double r, const std::string& fill);
  void polyline(const std::vector<std::pair<double, double>>& points,
                const std::string& stroke, double stroke_width = 1.5);
  void text(double x, double y, const std::string& content,
            double font_size = 11.0, const std::string& anchor = "start",
            const std::string& fill = "#111");

  std::string to_string() const;
  void write_file(const std::string& path) const;

 private:
  double width_;
  double height_;
  std::vector<std::string> elements_;
};

/// Affine map from data range to pixel range.
struct LinearScale {
  double domain_lo = 0.0, domain_hi = 1.0;
  double range_lo = 0.0, range_hi = 1.0;
  double operator()(double x) const {
    const double t = (x - domain_lo) / (domain_hi - domain_lo);
    return range_lo + t * (range_hi - range_lo);
  }
};

}  // namespace attnex
