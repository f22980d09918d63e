// src/plot.cc

// Copyright 2026  The vocart Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "vocart/plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vocart/errors.h"

namespace vocart {

namespace fs = std::filesystem;

namespace {

struct Rgb {
  double r, g, b;
};

std::string Hex(Rgb c) {
  char buf[8];
  auto q = [](double v) {
    return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", q(c.r), q(c.g), q(c.b));
  return buf;
}

Rgb Lerp(const std::vector<Rgb> &stops, double u) {
  u = std::clamp(u, 0.0, 1.0) * (stops.size() - 1);
  const size_t i = std::min(static_cast<size_t>(u), stops.size() - 2);
  const double f = u - i;
  return {stops[i].r + f * (stops[i + 1].r - stops[i].r),
          stops[i].g + f * (stops[i + 1].g - stops[i].g),
          stops[i].b + f * (stops[i + 1].b - stops[i].b)};
}

std::string Sequential(double u) {
  static const std::vector<Rgb> v = {{0.267, 0.005, 0.329},
                                     {0.231, 0.322, 0.545},
                                     {0.129, 0.569, 0.549},
                                     {0.369, 0.788, 0.384},
                                     {0.992, 0.906, 0.145}};
  return Hex(Lerp(v, u));
}

std::string Diverging(double u) {
  static const std::vector<Rgb> v = {
      {0.129, 0.400, 0.675}, {1.0, 1.0, 1.0}, {0.698, 0.094, 0.169}};
  return Hex(Lerp(v, u));
}

std::string Esc(const std::string &s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

class Svg {
 public:
  Svg(double w, double h) {
    os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
        << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << ' ' << h
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }
  std::ostringstream &os() { return os_; }
  void Text(double x, double y, const std::string &s, const char *anchor = "start",
            int size = 11) {
    os_ << "<text x=\"" << Num(x) << "\" y=\"" << Num(y) << "\" text-anchor=\""
        << anchor << "\" font-size=\"" << size << "\">" << Esc(s) << "</text>\n";
  }
  void Line(double x1, double y1, double x2, double y2,
            const char *stroke = "black") {
    os_ << "<line x1=\"" << Num(x1) << "\" y1=\"" << Num(y1) << "\" x2=\""
        << Num(x2) << "\" y2=\"" << Num(y2) << "\" stroke=\"" << stroke
        << "\"/>\n";
  }
  void Save(const fs::path &path) {
    os_ << "</svg>\n";
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f << os_.str();
    if (!f) throw IoError("write failed: " + path.string());
  }

 private:
  std::ostringstream os_;
};

template <typename ValueFn>
void Heatmap(Svg &svg, const std::string &name, const std::string &title,
             double x0, double y0, double w, double h, size_t frames,
             size_t mels, ValueFn value, bool diverging) {
  double lo = 0.0, hi = 0.0, max_abs = 0.0;
  bool first = true;
  for (size_t t = 0; t < frames; ++t)
    for (size_t m = 0; m < mels; ++m) {
      const double v = value(t, m);
      if (first) lo = hi = v;
      first = false;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      max_abs = std::max(max_abs, std::abs(v));
    }
  auto &os = svg.os();
  os << "<g class=\"panel\" data-name=\"" << name << "\" data-frames=\"" << frames
     << "\" data-mels=\"" << mels << "\" data-min=\"" << Num(lo)
     << "\" data-max=\"" << Num(hi) << "\" data-max-abs=\"" << Num(max_abs)
     << "\">\n";
  svg.Text(x0, y0 - 6, title);
  const double cw = frames ? w / frames : w, ch = mels ? h / mels : h;
  for (size_t t = 0; t < frames; ++t)
    for (size_t m = 0; m < mels; ++m) {
      const double v = value(t, m);
      double u;
      if (diverging)
        u = max_abs > 0 ? 0.5 + 0.5 * v / max_abs : 0.5;
      else
        u = hi > lo ? (v - lo) / (hi - lo) : 0.0;
      os << "<rect x=\"" << Num(x0 + t * cw) << "\" y=\""
         << Num(y0 + h - (m + 1) * ch) << "\" width=\"" << Num(cw + 0.05)
         << "\" height=\"" << Num(ch + 0.05) << "\" fill=\""
         << (diverging ? Diverging(u) : Sequential(u)) << "\"/>\n";
    }
  os << "<rect x=\"" << Num(x0) << "\" y=\"" << Num(y0) << "\" width=\"" << Num(w)
     << "\" height=\"" << Num(h) << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg.Text(x0 - 6, y0 + h, "0", "end");
  svg.Text(x0 - 6, y0 + 10, std::to_string(mels), "end");
  os << "</g>\n";
}

void Axes(Svg &svg, double x0, double y0, double w, double h, double xmin,
          double xmax, double ymin, double ymax, const std::string &xlabel,
          const std::string &ylabel) {
  svg.Line(x0, y0 + h, x0 + w, y0 + h);
  svg.Line(x0, y0, x0, y0 + h);
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + w * i / 4.0, fy = y0 + h - h * i / 4.0;
    svg.Line(fx, y0 + h, fx, y0 + h + 4);
    svg.Text(fx, y0 + h + 16, Num(xmin + (xmax - xmin) * i / 4.0), "middle");
    svg.Line(x0 - 4, fy, x0, fy);
    svg.Text(x0 - 6, fy + 4, Num(ymin + (ymax - ymin) * i / 4.0), "end");
  }
  svg.Text(x0 + w / 2, y0 + h + 32, xlabel, "middle");
  svg.os() << "<text x=\"" << Num(x0 - 40) << "\" y=\"" << Num(y0 + h / 2)
           << "\" text-anchor=\"middle\" transform=\"rotate(-90 " << Num(x0 - 40)
           << ' ' << Num(y0 + h / 2) << ")\">" << Esc(ylabel) << "</text>\n";
}

}  // namespace

void PlotSpecDiff(const MelSpectrogram &original, const MelSpectrogram &vocoded,
                  const MelResidual &residual, const std::string &title,
                  const fs::path &out) {
  if (original.n_mels() != vocoded.n_mels() || residual.n_mels != original.n_mels())
    throw ShapeError("spectrogram panels disagree on the mel count");
  const double W = 760, panel_h = 180, left = 60, top = 40, gap = 50;
  Svg svg(W, top + 3 * (panel_h + gap));
  svg.Text(W / 2, 20, title, "middle", 14);
  const double pw = W - left - 20;
  const size_t mels = original.n_mels();
  Heatmap(svg, "original", "original (log-mel)", left, top, pw, panel_h,
          original.n_frames, mels,
          [&](size_t t, size_t m) { return original.at(t, m); }, false);
  Heatmap(svg, "vocoded", "self-vocoded (log-mel)", left, top + panel_h + gap, pw,
          panel_h, vocoded.n_frames, mels,
          [&](size_t t, size_t m) { return vocoded.at(t, m); }, false);
  Heatmap(svg, "residual", "residual (original - vocoded)", left,
          top + 2 * (panel_h + gap), pw, panel_h, residual.n_frames, mels,
          [&](size_t t, size_t m) { return residual.at(t, m); }, true);
  svg.Save(out);
}

void PlotConfusion(const ConfusionMatrix &cm,
                   const std::vector<std::string> &class_names,
                   const fs::path &out) {
  const int n = cm.num_classes;
  if (n < 1 || class_names.size() != static_cast<size_t>(n))
    throw ArgumentError("one name per confusion class required");
  const std::vector<double> rates = cm.Rates();
  const double cell = 70, left = 130, top = 60;
  Svg svg(left + n * cell + 30, top + n * cell + 60);
  svg.Text(left + n * cell / 2, 20, "confusion matrix (row-normalised)", "middle", 14);
  svg.Text(left + n * cell / 2, top + n * cell + 40, "predicted class", "middle");
  auto &os = svg.os();
  for (int t = 0; t < n; ++t) {
    svg.Text(left - 8, top + t * cell + cell / 2 + 4, class_names[t], "end");
    svg.Text(left + t * cell + cell / 2, top - 8, class_names[t], "middle");
    for (int p = 0; p < n; ++p) {
      const double r = rates[t * n + p];
      os << "<rect class=\"cell\" data-row=\"" << t << "\" data-col=\"" << p
         << "\" data-count=\"" << cm.at(t, p) << "\" data-rate=\"" << Num(r)
         << "\" x=\"" << Num(left + p * cell) << "\" y=\"" << Num(top + t * cell)
         << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
         << Sequential(r) << "\" stroke=\"white\"/>\n";
      svg.Text(left + p * cell + cell / 2, top + t * cell + cell / 2 + 4,
               std::to_string(cm.at(t, p)), "middle");
    }
  }
  svg.Save(out);
}

void PlotDet(const ScoreSet &scores, const fs::path &out) {
  const std::vector<DetPoint> curve = DetCurve(scores);
  const EerResult eer = ComputeEer(scores);
  double lo = curve.front().threshold, hi = curve[curve.size() - 2].threshold;
  if (hi <= lo) hi = lo + 1.0;
  const double span = hi - lo;
  const double xmax = hi + 0.05 * span;
  auto xval = [&](double t) { return std::isinf(t) ? xmax : t; };
  const double left = 70, top = 40, w = 520, h = 320;
  Svg svg(left + w + 140, top + h + 60);
  svg.Text(left + w / 2, 20, "FAR / FRR against threshold", "middle", 14);
  Axes(svg, left, top, w, h, lo, xmax, 0.0, 1.0, "threshold", "error rate");
  auto X = [&](double t) { return left + w * (xval(t) - lo) / (xmax - lo); };
  auto Y = [&](double v) { return top + h - h * v; };
  auto &os = svg.os();
  for (int which = 0; which < 2; ++which) {
    os << "<polyline class=\"" << (which ? "frr" : "far") << "\" fill=\"none\" stroke=\""
       << (which ? "#b2182b" : "#2166ac") << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < curve.size(); ++i) {
      const double v = which ? curve[i].frr : curve[i].far;
      // FAR and FRR are step functions of the threshold
      if (i > 0) os << Num(X(curve[i].threshold)) << ','
                    << Num(Y(which ? curve[i - 1].frr : curve[i - 1].far)) << ' ';
      os << Num(X(curve[i].threshold)) << ',' << Num(Y(v)) << ' ';
    }
    os << "\"/>\n";
  }
  os << "<circle class=\"eer\" data-eer=\"" << Num(eer.eer) << "\" cx=\""
     << Num(X(std::min(eer.threshold, xmax))) << "\" cy=\"" << Num(Y(eer.eer))
     << "\" r=\"4\" fill=\"black\"/>\n";
  svg.Text(left + w + 10, top + 20, "FAR (real accepted)");
  svg.Text(left + w + 10, top + 40, "FRR (fake rejected)");
  svg.Line(left + w + 10, top + 24, left + w + 120, top + 24, "#2166ac");
  svg.Line(left + w + 10, top + 44, left + w + 120, top + 44, "#b2182b");
  svg.Text(left + w + 10, top + 70, "EER " + Num(100.0 * eer.eer) + "%");
  svg.Save(out);
}

void PlotAblation(const std::vector<AblationRow> &rows, const fs::path &out) {
  if (rows.empty()) throw ArgumentError("ablation table is empty");
  std::vector<AblationRow> sorted = rows;
  std::sort(sorted.begin(), sorted.end(),
            [](const AblationRow &a, const AblationRow &b) { return a.lambda < b.lambda; });
  double ymax = 0.0;
  for (const auto &r : sorted) ymax = std::max(ymax, r.test_eer);
  ymax = ymax > 0 ? ymax * 1.1 : 1.0;
  const double left = 70, top = 40, w = 520, h = 320;
  Svg svg(left + w + 30, top + h + 60);
  svg.Text(left + w / 2, 20, "test EER against loss weight", "middle", 14);
  Axes(svg, left, top, w, h, 0.0, 1.0, 0.0, ymax, "lambda", "test EER");
  auto X = [&](double l) { return left + w * l; };
  auto Y = [&](double v) { return top + h - h * v / ymax; };
  auto &os = svg.os();
  os << "<polyline fill=\"none\" stroke=\"#2166ac\" stroke-width=\"1.5\" points=\"";
  for (const auto &r : sorted) os << Num(X(r.lambda)) << ',' << Num(Y(r.test_eer)) << ' ';
  os << "\"/>\n";
  for (const auto &r : sorted)
    os << "<circle class=\"point\" data-lambda=\"" << Num(r.lambda)
       << "\" data-eer=\"" << Num(r.test_eer) << "\" cx=\"" << Num(X(r.lambda))
       << "\" cy=\"" << Num(Y(r.test_eer)) << "\" r=\"3.5\" fill=\"#2166ac\"/>\n";
  svg.Save(out);
}

}  // namespace vocart
