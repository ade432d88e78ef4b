#include "fixtures.hpp"

#include <algorithm>
#include <numeric>

namespace lcm::fx {

TextureAtlas solid_atlas(Rgba8 c, int size) { return {Plane<Rgba8>(size, size, c)}; }

ArtMesh quad_mesh(int id, double x0, double y0, double x1, double y1, int texture, int draw_order, std::string name,
                  std::vector<std::string> path) {
  ArtMesh m;
  m.id = id;
  m.name = name.empty() ? "mesh" + std::to_string(id) : std::move(name);
  m.path = std::move(path);
  m.vertices = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  m.uvs = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  m.texture = texture;
  m.draw_order = draw_order;
  return m;
}

ModelBuilder::ModelBuilder(int width, int height) {
  model.canvas_width = width;
  model.canvas_height = height;
  model.taxonomy = Taxonomy::default_taxonomy();
}

ModelBuilder& ModelBuilder::quad(int id, double x0, double y0, double x1, double y1, int draw_order, Rgba8 color,
                                 ClassId label, std::string name, std::vector<std::string> path) {
  model.atlases.push_back(solid_atlas(color));
  auto m = quad_mesh(id, x0, y0, x1, y1, static_cast<int>(model.atlases.size() - 1), draw_order, std::move(name),
                     std::move(path));
  m.label = label;
  model.meshes.push_back(std::move(m));
  return *this;
}

ModelBuilder& ModelBuilder::triangle(int id, Vec2 a, Vec2 b, Vec2 c, int draw_order, Rgba8 color, ClassId label) {
  model.atlases.push_back(solid_atlas(color));
  ArtMesh m;
  m.id = id;
  m.name = "tri" + std::to_string(id);
  m.vertices = {a, b, c};
  m.uvs = {{0, 0}, {1, 0}, {0, 1}};
  m.triangles = {{0, 1, 2}};
  m.texture = static_cast<int>(model.atlases.size() - 1);
  m.draw_order = draw_order;
  m.label = label;
  model.meshes.push_back(std::move(m));
  return *this;
}

CharacterModel ModelBuilder::build() const { return model; }

CharacterModel random_model(Rng& rng, const RandomModelOptions& o) {
  std::uniform_int_distribution<int> count(o.min_meshes, o.max_meshes);
  const int n = count(rng);
  ModelBuilder b(o.width, o.height);

  std::vector<int> orders(4 * n + 8);
  std::iota(orders.begin(), orders.end(), -2 * n);
  std::shuffle(orders.begin(), orders.end(), rng);

  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<std::vector<std::string>> paths = {{}, {"Body"}, {"Body", "Upper"}, {"Head"}, {"Head", "Hair"}};
  for (int i = 0; i < n; ++i) {
    Rgba8 color{static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng)),
                static_cast<std::uint8_t>(byte(rng)), 255};
    if (!o.binary_alpha) color.a = unit(rng) < 0.3 ? 255 : static_cast<std::uint8_t>(byte(rng));
    b.model.atlases.push_back(solid_atlas(color));

    ArtMesh m;
    m.id = 10 * i + static_cast<int>(rng() % 7);
    m.name = "mesh" + std::to_string(m.id);
    m.path = paths[rng() % paths.size()];
    m.texture = static_cast<int>(b.model.atlases.size() - 1);
    m.draw_order = orders[i];
    m.opacity = o.binary_alpha ? 1.0 : 0.25 + 0.75 * unit(rng);
    if (o.labeled) m.label = static_cast<ClassId>(rng() % o.classes_used);

    // Vertices on a half-pixel lattice so edges regularly pass through
    // pixel centers.
    const double cx = std::floor(unit(rng) * o.width), cy = std::floor(unit(rng) * o.height);
    const double r = 3.0 + unit(rng) * o.width / 2.0;
    const int tris = 1 + static_cast<int>(rng() % 3);
    for (int t = 0; t < tris; ++t) {
      for (int v = 0; v < 3; ++v) {
        const double x = std::round(2.0 * (cx + (2 * unit(rng) - 1) * r)) / 2.0;
        const double y = std::round(2.0 * (cy + (2 * unit(rng) - 1) * r)) / 2.0;
        m.vertices.push_back({x, y});
        m.uvs.push_back({unit(rng), unit(rng)});
      }
      const auto base = static_cast<std::uint32_t>(3 * t);
      m.triangles.push_back({base, base + 1, base + 2});
    }
    b.model.meshes.push_back(std::move(m));
  }
  // ids must be unique; the construction above guarantees it (10*i + [0,7)).
  return b.build();
}

CharacterModel tri3_model() {
  const ClassId hair = 0, face = 1;
  return ModelBuilder(32, 32)
      .quad(0, 4, 2, 28, 30, 3, {90, 50, 30, 255}, hair, "HairBack", {"Head", "Hair"})
      .quad(1, 8, 6, 24, 26, 7, {240, 200, 170, 255}, face, "Face", {"Head"})
      .quad(2, 6, 2, 26, 12, 11, {120, 70, 40, 255}, hair, "HairFront", {"Head", "Hair"})
      .build();
}

void add_angle_parameters(CharacterModel& model, Rng& rng) {
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (const char* name : {"AngleX", "AngleY"}) {
    DeformParameter p;
    p.name = name;
    for (const auto& m : model.meshes) {
      std::vector<Vec2> minus, plus;
      for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        minus.push_back({d(rng), d(rng)});
        plus.push_back({d(rng), d(rng)});
      }
      p.minus[m.id] = std::move(minus);
      p.plus[m.id] = std::move(plus);
    }
    model.parameters.push_back(std::move(p));
  }
}

namespace {

double cross(Vec2 p, Vec2 q, Vec2 r) { return (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x); }

// Whether edge p->q of a triangle with third vertex r is a top or left edge.
// Top: horizontal with the interior below it (y grows downward).
// Left: the interior lies at larger x than the edge.
bool top_or_left(Vec2 p, Vec2 q, Vec2 r) {
  if (p.y == q.y) return r.y > p.y;
  // sign of (x_r - x_edge(r.y)) along a horizontal line through r
  const double s = ((r.x - p.x) * (q.y - p.y) - (r.y - p.y) * (q.x - p.x)) / (q.y - p.y);
  return s > 0.0;
}

}  // namespace

bool triangle_covers(Vec2 a, Vec2 b, Vec2 c, int x, int y) {
  const Vec2 pt{x + 0.5, y + 0.5};
  const double area = cross(a, b, c);
  if (area == 0.0) return false;
  const Vec2 v[3] = {a, b, c};
  for (int e = 0; e < 3; ++e) {
    const Vec2 p = v[e], q = v[(e + 1) % 3], r = v[(e + 2) % 3];
    // positive when pt is on the same side of pq as r
    const double side = cross(p, q, pt) * (area > 0 ? 1.0 : -1.0);
    if (side < 0.0) return false;
    if (side == 0.0 && !top_or_left(p, q, r)) return false;
  }
  return true;
}

bool mesh_covers(const ArtMesh& mesh, int x, int y) {
  for (const auto& t : mesh.triangles)
    if (triangle_covers(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]], x, y)) return true;
  return false;
}

Rgba solid_color(const CharacterModel& model, const ArtMesh& mesh) {
  const Rgba8 c = model.atlases[mesh.texture].pixels(0, 0);
  const float a = c.a / 255.f * static_cast<float>(mesh.opacity);
  if (a <= 0.f) return {};
  return {c.r / 255.f, c.g / 255.f, c.b / 255.f, a};
}

float solid_mask_alpha(const CharacterModel& model, const ArtMesh& mesh) {
  return static_cast<float>(model.atlases[mesh.texture].pixels(0, 0).a) / 255.f * static_cast<float>(mesh.opacity);
}

namespace {

std::vector<std::size_t> by_draw_order(const CharacterModel& model) {
  std::vector<std::size_t> idx(model.meshes.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](auto a, auto b) { return model.meshes[a].draw_order < model.meshes[b].draw_order; });
  return idx;
}

}  // namespace

RGBAImage painter_oracle(const CharacterModel& model, const std::set<int>* only) {
  RGBAImage out(model.canvas_width, model.canvas_height);
  const auto order = by_draw_order(model);
  for (int y = 0; y < model.canvas_height; ++y)
    for (int x = 0; x < model.canvas_width; ++x) {
      double r = 0, g = 0, b = 0, a = 0;  // straight color
      for (auto i : order) {
        const auto& m = model.meshes[i];
        if (only && !only->count(m.id)) continue;
        if (!mesh_covers(m, x, y)) continue;
        const Rgba s = solid_color(model, m);
        if (s.a <= 0.f) continue;
        const double keep = a * (1.0 - s.a);
        const double na = s.a + keep;
        r = (s.r * s.a + r * keep) / na;
        g = (s.g * s.a + g * keep) / na;
        b = (s.b * s.a + b * keep) / na;
        a = na;
      }
      if (a > 0) out(x, y) = {static_cast<float>(r), static_cast<float>(g), static_cast<float>(b), static_cast<float>(a)};
    }
  return out;
}

std::vector<Mask> visibility_oracle(const CharacterModel& model, double tau) {
  std::vector<Mask> masks(model.meshes.size(), Mask(model.canvas_width, model.canvas_height, 0));
  auto order = by_draw_order(model);
  std::reverse(order.begin(), order.end());
  for (int y = 0; y < model.canvas_height; ++y)
    for (int x = 0; x < model.canvas_width; ++x) {
      double t = 1.0;
      for (auto i : order) {
        if (!mesh_covers(model.meshes[i], x, y)) continue;
        const double a = solid_mask_alpha(model, model.meshes[i]);
        if (a * t >= tau) masks[i](x, y) = 1;
        t *= 1.0 - a;
      }
    }
  return masks;
}

Plane<int> topmost_oracle(const CharacterModel& model, const std::set<int>* only) {
  Plane<int> out(model.canvas_width, model.canvas_height, -1);
  const auto order = by_draw_order(model);
  for (int y = 0; y < model.canvas_height; ++y)
    for (int x = 0; x < model.canvas_width; ++x)
      for (auto i : order) {
        const auto& m = model.meshes[i];
        if (only && !only->count(m.id)) continue;
        if (mesh_covers(m, x, y) && solid_color(model, m).a > 0.f) out(x, y) = static_cast<int>(i);
      }
  return out;
}

LabelAssignment vote_oracle(const CharacterModel& model, const ScoreStack& stack, const std::vector<Mask>& masks) {
  LabelAssignment out;
  for (std::size_t i = 0; i < model.meshes.size(); ++i) {
    std::vector<double> sums(stack.n_classes, 0.0);
    std::size_t count = 0;
    for (int y = 0; y < stack.height; ++y)
      for (int x = 0; x < stack.width; ++x) {
        if (!masks[i](x, y)) continue;
        ++count;
        for (int c = 0; c < stack.n_classes; ++c) sums[c] += stack.at(x, y, c);
      }
    LabelEntry e;
    if (count > 0) {
      int best = 0;
      for (int c = 1; c < stack.n_classes; ++c)
        if (sums[c] / count > sums[best] / count) best = c;
      e = {best, sums[best] / count, LabelSource::Vote};
    }
    out.entries[model.meshes[i].id] = e;
  }
  return out;
}

ScoreStack coarse_score_stack(Rng& rng, int width, int height, int classes) {
  ScoreStack s{width, height, classes, std::vector<float>(static_cast<std::size_t>(width) * height * classes)};
  std::uniform_int_distribution<int> eighth(0, 8);
  for (auto& v : s.scores) v = static_cast<float>(eighth(rng)) / 8.f;
  return s;
}

PropagationScenario propagation_scenario(int index) {
  static const char* const kTokens[] = {"Hair", "Sleeve", "Skirt", "Glove", "Ribbon", "Collar", "Boot"};
  const ClassId a = index % 19;
  const ClassId b = (index + 5) % 19;
  const bool heavy = index % 2 == 1;  // one sibling outweighs the other two
  const int depth = 1 + index % 4;
  const std::string tok = kTokens[index % 7];

  ModelBuilder mb(16, 16);
  int z = 0;
  auto add = [&](int id, const std::string& name, std::vector<std::string> path, ClassId label) {
    mb.quad(id, 0, 0, 1, 1, z++, {128, 128, 128, 255}, label, name, std::move(path));
  };
  // STRING: shares "part" and the body-part token with mesh 1 only.
  add(1, "Part" + tok + "Front", {"Body", "G"}, a);
  add(2, "Part" + tok + "Back", {"Other"}, kUnlabeled);
  // SIBLING: two votes for b against one for a (or a heavy one for a).
  add(3, "q", {"Sib"}, b);
  add(4, "w", {"Sib"}, b);
  add(5, "e", {"Sib"}, a);
  add(6, "r", {"Sib"}, kUnlabeled);
  add(7, "t", {"Sib"}, kUnlabeled);  // manual "unlabeled" stays put
  // PARENT: labeled only in a side branch of "Deep".
  std::vector<std::string> deep{"Deep"};
  for (int d = 1; d <= depth; ++d) deep.push_back("L" + std::to_string(d));
  add(8, "z", deep, kUnlabeled);
  add(9, "k", {"Deep", "Side"}, b);
  // PARENT up to the root.
  add(10, "solo", {"Lonely", "X"}, kUnlabeled);

  PropagationScenario s;
  s.model = mb.build();
  s.input = assignment_from_model(s.model);
  for (auto& [id, e] : s.input.entries)
    if (e.labeled()) e = {e.label, 0.9, LabelSource::Vote};
  s.input.entries[7] = {kUnlabeled, 1.0, LabelSource::Manual};
  for (const auto& m : s.model.meshes) s.weights[m.id] = 1.0;
  if (heavy) s.weights[5] = 5.0;

  s.expected = s.input;
  s.expected.entries[2] = {a, 1.0, LabelSource::String};
  // Sibling tally over meshes 3, 4, 5.
  const double sib_b = 2.0, sib_a = heavy ? 5.0 : 1.0;
  const ClassId sib = sib_a > sib_b || (sib_a == sib_b && a < b) ? a : b;
  s.expected.entries[6] = {sib, std::max(sib_a, sib_b) / (sib_a + sib_b), LabelSource::Sibling};
  s.expected.entries[8] = {b, 1.0, LabelSource::Parent};
  // Root tally: every mesh labeled when the PARENT stage starts.
  // a: 1, 2, 5 and 6 when it went to a; b: 3, 4, 9 and 6 when it went to b.
  double root_a = 1.0 + 1.0 + sib_a + (sib == a ? 1.0 : 0.0);
  double root_b = 2.0 + 1.0 + (sib == b ? 1.0 : 0.0);
  const ClassId root = root_a > root_b || (root_a == root_b && a < b) ? a : b;
  s.expected.entries[10] = {root, std::max(root_a, root_b) / (root_a + root_b), LabelSource::Parent};
  return s;
}

}  // namespace lcm::fx
