#include "attnex/svg.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace attnex {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::fixed << v;
  return os.str();
}

std::string escape_text(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

SvgDocument::SvgDocument(double width, double height)
    : width_(width), height_(height) {}

void SvgDocument::line(double x1, double y1, double x2, double y2,
                       const std::string& stroke, double stroke_width) {
  elements_.push_back("<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) +
                      "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
                      "\" stroke=\"" + stroke + "\" stroke-width=\"" +
                      num(stroke_width) + "\"/>");
}

void SvgDocument::rect(double x, double y, double w, double h,
                       const std::string& fill, const std::string& stroke) {
  elements_.push_back("<rect x=\"" + num(x) + "\" y=\"" + num(y) +
                      "\" width=\"" + num(w) + "\" height=\"" + num(h) +
                      "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\"/>");
}

void SvgDocument::circle(double cx, double cy, double r,
                         const std::string& fill) {
  elements_.push_back("<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) +
                      "\" r=\"" + num(r) + "\" fill=\"" + fill + "\"/>");
}

void SvgDocument::polyline(
    const std::vector<std::pair<double, double>>& points,
    const std::string& stroke, double stroke_width) {
  std::string pts;
  for (const auto& [x, y] : points) {
    if (!pts.empty()) pts += ' ';
    pts += num(x) + "," + num(y);
  }
  elements_.push_back("<polyline points=\"" + pts +
                      "\" fill=\"none\" stroke=\"" + stroke +
                      "\" stroke-width=\"" + num(stroke_width) + "\"/>");
}

void SvgDocument::text(double x, double y, const std::string& content,
                       double font_size, const std::string& anchor,
                       const std::string& fill) {
  elements_.push_back("<text x=\"" + num(x) + "\" y=\"" + num(y) +
                      "\" font-size=\"" + num(font_size) +
                      "\" text-anchor=\"" + anchor + "\" fill=\"" + fill +
                      "\" font-family=\"sans-serif\">" +
                      escape_text(content) + "</text>");
}

std::string SvgDocument::to_string() const {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_)
      << "\" height=\"" << num(height_) << "\" viewBox=\"0 0 " << num(width_)
      << " " << num(height_) << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << num(width_) << "\" height=\""
      << num(height_) << "\" fill=\"white\"/>\n";
  for (const auto& e : elements_) out << e << "\n";
  out << "</svg>\n";
  return out.str();
}

void SvgDocument::write_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("SvgDocument: cannot write " + path);
  out << to_string();
}

}  // namespace attnex
