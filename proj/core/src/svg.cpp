#include "promptcal/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <string_view>
#include <vector>

namespace promptcal::svg {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* color_for(std::string_view method) {
  if (method == "baseline") return "#1f3b73";
  if (method == "null_input") return "#e08214";
  if (method == "prior_match") return "#2ca02c";
  if (method == "optimal") return "#7f7f7f";
  return "#444444";
}

struct Frame {
  double width = 0, height = 0;
  double left = 60, right = 20, top = 30, bottom = 50;
  double lo = 0, hi = 1;  // y data range

  double plot_w() const { return width - left - right; }
  double plot_h() const { return height - top - bottom; }
  double y(double v) const { return top + (hi - v) / (hi - lo) * plot_h(); }
};

void y_axis(std::ostringstream& os, const Frame& f, const std::string& label) {
  os << "<line x1=\"" << fmt(f.left) << "\" y1=\"" << fmt(f.top) << "\" x2=\""
     << fmt(f.left) << "\" y2=\"" << fmt(f.top + f.plot_h())
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = f.lo + (f.hi - f.lo) * i / 5.0;
    os << "<line x1=\"" << fmt(f.left - 4) << "\" y1=\"" << fmt(f.y(v))
       << "\" x2=\"" << fmt(f.left) << "\" y2=\"" << fmt(f.y(v))
       << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << fmt(f.left - 6) << "\" y=\"" << fmt(f.y(v) + 4)
       << "\" font-size=\"10\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
  }
  os << "<text x=\"14\" y=\"" << fmt(f.top + f.plot_h() / 2)
     << "\" font-size=\"12\" transform=\"rotate(-90 14 "
     << fmt(f.top + f.plot_h() / 2) << ")\" text-anchor=\"middle\">"
     << escape(label) << "</text>\n";
}

}  // namespace

std::string render_boxplots(const json& boxplots) {
  const json& methods = boxplots.at("methods");
  std::vector<std::string> method_names;
  std::set<std::string> prompt_set;
  double lo = 1.0, hi = 0.0;
  for (const auto& [method, prompts] : methods.items()) {
    method_names.push_back(method);
    for (const auto& [prompt, box] : prompts.items()) {
      prompt_set.insert(prompt);
      lo = std::min(lo, box.at("min").get<double>());
      hi = std::max(hi, box.at("max").get<double>());
    }
  }
  // Draw methods in their canonical order where known.
  static const std::vector<std::string> order{"baseline", "null_input",
                                              "prior_match", "optimal"};
  std::stable_sort(method_names.begin(), method_names.end(),
                   [](const std::string& a, const std::string& b) {
                     auto rank = [](const std::string& m) {
                       return std::find(order.begin(), order.end(), m) - order.begin();
                     };
                     return rank(a) < rank(b);
                   });
  const std::vector<std::string> prompts(prompt_set.begin(), prompt_set.end());

  Frame f;
  const double box_w = 14.0, gap = 6.0, group_pad = 24.0;
  const double group_w =
      static_cast<double>(method_names.size()) * (box_w + gap) + group_pad;
  f.width = f.left + f.right + std::max(1.0, static_cast<double>(prompts.size())) * group_w;
  f.height = 360;
  f.bottom = 70;
  if (lo > hi) {
    lo = 0.0;
    hi = 1.0;
  }
  f.lo = std::max(0.0, std::floor(lo * 10.0) / 10.0);
  f.hi = std::min(1.0, std::ceil(hi * 10.0) / 10.0);
  if (f.hi <= f.lo) f.hi = f.lo + 0.1;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(f.width)
     << "\" height=\"" << fmt(f.height) << "\" viewBox=\"0 0 " << fmt(f.width)
     << " " << fmt(f.height) << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  y_axis(os, f, "accuracy");

  for (std::size_t p = 0; p < prompts.size(); ++p) {
    const double gx = f.left + static_cast<double>(p) * group_w + group_pad / 2;
    for (std::size_t m = 0; m < method_names.size(); ++m) {
      const auto& per_prompt = methods.at(method_names[m]);
      if (!per_prompt.contains(prompts[p])) continue;
      const json& b = per_prompt.at(prompts[p]);
      const double x = gx + static_cast<double>(m) * (box_w + gap);
      const double cx = x + box_w / 2;
      const char* color = color_for(method_names[m]);
      const double q1 = f.y(b.at("q1").get<double>());
      const double q3 = f.y(b.at("q3").get<double>());
      os << "<line x1=\"" << fmt(cx) << "\" y1=\""
         << fmt(f.y(b.at("whisker_low").get<double>())) << "\" x2=\"" << fmt(cx)
         << "\" y2=\"" << fmt(f.y(b.at("whisker_high").get<double>()))
         << "\" stroke=\"" << color << "\"/>\n"
         << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(q3) << "\" width=\""
         << fmt(box_w) << "\" height=\"" << fmt(std::max(q1 - q3, 0.5))
         << "\" fill=\"" << color << "\" fill-opacity=\"0.6\" stroke=\"" << color
         << "\"/>\n"
         << "<line x1=\"" << fmt(x) << "\" y1=\""
         << fmt(f.y(b.at("median").get<double>())) << "\" x2=\""
         << fmt(x + box_w) << "\" y2=\"" << fmt(f.y(b.at("median").get<double>()))
         << "\" stroke=\"black\"/>\n";
      for (const auto& o : b.at("outliers")) {
        os << "<circle cx=\"" << fmt(cx) << "\" cy=\"" << fmt(f.y(o.get<double>()))
           << "\" r=\"2\" fill=\"none\" stroke=\"" << color << "\"/>\n";
      }
    }
    os << "<text x=\"" << fmt(gx + (group_w - group_pad) / 2) << "\" y=\""
       << fmt(f.top + f.plot_h() + 16)
       << "\" font-size=\"11\" text-anchor=\"middle\">" << escape(prompts[p])
       << "</text>\n";
  }

  double lx = f.left;
  for (const auto& m : method_names) {
    os << "<rect x=\"" << fmt(lx) << "\" y=\"" << fmt(f.height - 22)
       << "\" width=\"10\" height=\"10\" fill=\"" << color_for(m) << "\"/>\n"
       << "<text x=\"" << fmt(lx + 14) << "\" y=\"" << fmt(f.height - 13)
       << "\" font-size=\"11\">" << escape(m) << "</text>\n";
    lx += 110;
  }
  os << "</svg>\n";
  return os.str();
}

std::string render_alignment(const json& alignment) {
  struct Series {
    const char* key;
    const char* color;
  };
  const Series series[] = {{"prior_match", color_for("prior_match")},
                           {"null_input", color_for("null_input")}};

  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& s : series) {
    if (!alignment.contains(s.key)) continue;
    for (const auto& p : alignment.at(s.key).at("pairs")) {
      for (const char* axis : {"log_optimal", "log_other"}) {
        const double v = p.at(axis).get<double>();
        lo = any ? std::min(lo, v) : v;
        hi = any ? std::max(hi, v) : v;
        any = true;
      }
    }
  }
  if (!any || hi <= lo) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  Frame f;
  f.width = 420;
  f.height = 420;
  f.lo = lo;
  f.hi = hi;
  auto x = [&](double v) { return f.left + (v - lo) / (hi - lo) * f.plot_w(); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(f.width)
     << "\" height=\"" << fmt(f.height) << "\" viewBox=\"0 0 " << fmt(f.width)
     << " " << fmt(f.height) << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  y_axis(os, f, "log weight (method)");
  os << "<line x1=\"" << fmt(f.left) << "\" y1=\"" << fmt(f.top + f.plot_h())
     << "\" x2=\"" << fmt(f.left + f.plot_w()) << "\" y2=\""
     << fmt(f.top + f.plot_h()) << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << fmt(x(lo)) << "\" y1=\"" << fmt(f.y(lo)) << "\" x2=\""
     << fmt(x(hi)) << "\" y2=\"" << fmt(f.y(hi))
     << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n"
     << "<text x=\"" << fmt(f.left + f.plot_w() / 2) << "\" y=\""
     << fmt(f.height - 12)
     << "\" font-size=\"12\" text-anchor=\"middle\">log weight (optimal)</text>\n";

  double ly = f.top + 4;
  for (const auto& s : series) {
    if (!alignment.contains(s.key)) continue;
    for (const auto& p : alignment.at(s.key).at("pairs")) {
      os << "<circle cx=\"" << fmt(x(p.at("log_optimal").get<double>()))
         << "\" cy=\"" << fmt(f.y(p.at("log_other").get<double>()))
         << "\" r=\"3\" fill=\"" << s.color << "\" fill-opacity=\"0.7\"/>\n";
    }
    const json& corr = alignment.at(s.key).at("correlation");
    os << "<text x=\"" << fmt(f.left + 8) << "\" y=\"" << fmt(ly)
       << "\" font-size=\"11\" fill=\"" << s.color << "\">" << s.key
       << " r=" << (corr.is_number() ? fmt(corr.get<double>()) : "n/a")
       << "</text>\n";
    ly += 14;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace promptcal::svg
