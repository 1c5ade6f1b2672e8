#include "glyphdiff/font/stroke_font.hpp"

namespace gd {

// Bundled single-stroke sans glyphs on a 0.6 x 1.0 box, y down.
StrokeFont builtin_sans_font() {
  using P = std::vector<Vec2>;
  StrokeFont f;
  f.name_ = "sans";
  f.stroke_width_ = 0.095;
  auto& g = f.glyphs_;

  g['A'] = {{P{{0, 1}, {0.3, 0}, {0.6, 1}}, P{{0.13, 0.62}, {0.47, 0.62}}}, 0.78};
  g['B'] = {{P{{0, 0}, {0, 1}},
             P{{0, 0}, {0.42, 0}, {0.54, 0.1}, {0.54, 0.38}, {0.42, 0.48}, {0, 0.48}},
             P{{0, 0.48}, {0.46, 0.48}, {0.6, 0.6}, {0.6, 0.88}, {0.46, 1}, {0, 1}}},
            0.78};
  g['C'] = {{P{{0.6, 0.16}, {0.44, 0}, {0.16, 0}, {0, 0.16}, {0, 0.84}, {0.16, 1}, {0.44, 1},
              {0.6, 0.84}}},
            0.78};
  g['D'] = {{P{{0, 0}, {0, 1}}, P{{0, 0}, {0.38, 0}, {0.6, 0.22}, {0.6, 0.78}, {0.38, 1}, {0, 1}}},
            0.78};
  g['E'] = {{P{{0.56, 0}, {0, 0}, {0, 1}, {0.56, 1}}, P{{0, 0.5}, {0.44, 0.5}}}, 0.78};
  g['F'] = {{P{{0.56, 0}, {0, 0}, {0, 1}}, P{{0, 0.5}, {0.44, 0.5}}}, 0.78};
  g['G'] = {{P{{0.6, 0.16}, {0.44, 0}, {0.16, 0}, {0, 0.16}, {0, 0.84}, {0.16, 1}, {0.44, 1},
              {0.6, 0.84}, {0.6, 0.56}, {0.34, 0.56}}},
            0.78};
  g['H'] = {{P{{0, 0}, {0, 1}}, P{{0.6, 0}, {0.6, 1}}, P{{0, 0.5}, {0.6, 0.5}}}, 0.78};
  g['I'] = {{P{{0.3, 0}, {0.3, 1}}, P{{0.1, 0}, {0.5, 0}}, P{{0.1, 1}, {0.5, 1}}}, 0.78};
  g['J'] = {{P{{0.5, 0}, {0.5, 0.84}, {0.36, 1}, {0.14, 1}, {0, 0.84}}}, 0.78};
  g['K'] = {{P{{0, 0}, {0, 1}}, P{{0.56, 0}, {0, 0.56}}, P{{0.2, 0.4}, {0.6, 1}}}, 0.78};
  g['L'] = {{P{{0, 0}, {0, 1}, {0.56, 1}}}, 0.78};
  g['M'] = {{P{{0, 1}, {0, 0}, {0.3, 0.52}, {0.6, 0}, {0.6, 1}}}, 0.78};
  g['N'] = {{P{{0, 1}, {0, 0}, {0.6, 1}, {0.6, 0}}}, 0.78};
  g['O'] = {{P{{0.16, 0}, {0.44, 0}, {0.6, 0.16}, {0.6, 0.84}, {0.44, 1}, {0.16, 1}, {0, 0.84},
              {0, 0.16}, {0.16, 0}}},
            0.78};
  g['P'] = {{P{{0, 1}, {0, 0}, {0.44, 0}, {0.6, 0.12}, {0.6, 0.4}, {0.44, 0.52}, {0, 0.52}}},
            0.78};
  g['Q'] = {{P{{0.16, 0}, {0.44, 0}, {0.6, 0.16}, {0.6, 0.84}, {0.44, 1}, {0.16, 1}, {0, 0.84},
              {0, 0.16}, {0.16, 0}},
             P{{0.36, 0.72}, {0.6, 0.98}}},
            0.78};
  g['R'] = {{P{{0, 1}, {0, 0}, {0.44, 0}, {0.6, 0.12}, {0.6, 0.4}, {0.44, 0.52}, {0, 0.52}},
             P{{0.26, 0.52}, {0.6, 1}}},
            0.78};
  g['S'] = {{P{{0.6, 0.13}, {0.45, 0}, {0.15, 0}, {0, 0.13}, {0, 0.37}, {0.15, 0.5},
              {0.45, 0.5}, {0.6, 0.63}, {0.6, 0.87}, {0.45, 1}, {0.15, 1}, {0, 0.87}}},
            0.78};
  g['T'] = {{P{{0, 0}, {0.6, 0}}, P{{0.3, 0}, {0.3, 1}}}, 0.78};
  g['U'] = {{P{{0, 0}, {0, 0.84}, {0.16, 1}, {0.44, 1}, {0.6, 0.84}, {0.6, 0}}}, 0.78};
  g['V'] = {{P{{0, 0}, {0.3, 1}, {0.6, 0}}}, 0.78};
  g['W'] = {{P{{0, 0}, {0.13, 1}, {0.3, 0.42}, {0.47, 1}, {0.6, 0}}}, 0.78};
  g['X'] = {{P{{0, 0}, {0.6, 1}}, P{{0.6, 0}, {0, 1}}}, 0.78};
  g['Y'] = {{P{{0, 0}, {0.3, 0.46}, {0.6, 0}}, P{{0.3, 0.46}, {0.3, 1}}}, 0.78};
  g['Z'] = {{P{{0, 0}, {0.6, 0}, {0, 1}, {0.6, 1}}}, 0.78};

  g['0'] = {{P{{0.16, 0}, {0.44, 0}, {0.6, 0.16}, {0.6, 0.84}, {0.44, 1}, {0.16, 1}, {0, 0.84},
              {0, 0.16}, {0.16, 0}},
             P{{0.13, 0.74}, {0.47, 0.26}}},
            0.78};
  g['1'] = {{P{{0.12, 0.18}, {0.32, 0}, {0.32, 1}}, P{{0.1, 1}, {0.54, 1}}}, 0.78};
  g['2'] = {{P{{0, 0.14}, {0.14, 0}, {0.46, 0}, {0.6, 0.14}, {0.6, 0.34}, {0, 1}, {0.6, 1}}},
            0.78};
  g['3'] = {{P{{0, 0.12}, {0.15, 0}, {0.45, 0}, {0.6, 0.12}, {0.6, 0.38}, {0.45, 0.5},
              {0.22, 0.5}},
             P{{0.45, 0.5}, {0.6, 0.62}, {0.6, 0.88}, {0.45, 1}, {0.15, 1}, {0, 0.88}}},
            0.78};
  g['4'] = {{P{{0.46, 1}, {0.46, 0}, {0, 0.68}, {0.6, 0.68}}}, 0.78};
  g['5'] = {{P{{0.56, 0}, {0.06, 0}, {0.02, 0.44}, {0.4, 0.42}, {0.58, 0.58}, {0.58, 0.84},
              {0.42, 1}, {0.12, 1}, {0, 0.88}}},
            0.78};
  g['6'] = {{P{{0.55, 0.1}, {0.4, 0}, {0.18, 0}, {0.02, 0.16}, {0, 0.8}, {0.16, 1}, {0.44, 1},
              {0.6, 0.84}, {0.6, 0.6}, {0.44, 0.47}, {0.02, 0.5}}},
            0.78};
  g['7'] = {{P{{0, 0}, {0.6, 0}, {0.22, 1}}}, 0.78};
  g['8'] = {{P{{0.16, 0}, {0.44, 0}, {0.57, 0.12}, {0.57, 0.36}, {0.44, 0.48}, {0.16, 0.48},
              {0.03, 0.36}, {0.03, 0.12}, {0.16, 0}},
             P{{0.16, 0.48}, {0.44, 0.48}, {0.6, 0.62}, {0.6, 0.87}, {0.45, 1}, {0.15, 1},
              {0, 0.87}, {0, 0.62}, {0.16, 0.48}}},
            0.78};
  g['9'] = {{P{{0.05, 0.9}, {0.2, 1}, {0.42, 1}, {0.58, 0.84}, {0.6, 0.2}, {0.44, 0}, {0.16, 0},
              {0, 0.16}, {0, 0.4}, {0.16, 0.53}, {0.58, 0.5}}},
            0.78};

  g[' '] = {{}, 0.6};
  return f;
}

}  // namespace gd
