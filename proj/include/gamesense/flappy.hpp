#pragma once

// Side-scrolling pipe-dodging game. SPACE (or a click) flaps; gravity pulls
// the bird down; passing a pipe scores one point. The left edge carries an
// altitude gauge so the bird's height is readable from pixels, which is what
// the flight policy trains on.

#include <deque>

#include "gamesense/digits.hpp"
#include "gamesense/env.hpp"

namespace gamesense {

namespace flappy_colors {
inline constexpr Color kSky{120, 185, 230};
inline constexpr Color kGround{170, 130, 80};
inline constexpr Color kPipe{45, 175, 60};
inline constexpr Color kBird{250, 210, 40};
inline constexpr Color kGaugeFill{235, 70, 200};
inline constexpr Color kGaugeBg{35, 35, 45};
inline constexpr Color kDigit{255, 255, 255};
inline constexpr Color kDeath{205, 35, 35};
inline constexpr Color kTitle{70, 90, 210};
}  // namespace flappy_colors

class FlappyEnv : public Environment {
public:
    explicit FlappyEnv(EnvConfig cfg)
        : Environment(std::move(cfg)),
          physics_rng_(cfg_.seed, "flappy/physics"),
          spawn_rng_(cfg_.seed, "flappy/spawn") {
        reset_world();
    }

    std::vector<std::string> key_set() const override { return {"SPACE", "ENTER"}; }
    bool supports_pointer() const override { return true; }  // click = flap
    bool supports_pointer_move() const override { return false; }

    std::vector<std::string> checkpoints() const override { return {"start"}; }

    void restart(const std::string& checkpoint) override {
        if (checkpoint != "start")
            throw std::invalid_argument("flappy: unknown checkpoint '" + checkpoint + "'");
        if (cfg_.freeze_rng) {
            physics_rng_.set_counter(0);
            spawn_rng_.set_counter(0);
        }
        reset_input_state();
        reset_world();
        set_phase(Phase::Playing);
    }

    Frame frame() const override {
        Frame f;
        render(f, nullptr);
        return f;
    }

    KvFile layout() const override {
        const FlappyPhysics& p = cfg_.flappy;
        KvFile kv;
        kv.header.name = "";
        kv.header.set("game", "flappy");
        kv.header.set("width", strf("%d", p.width));
        kv.header.set("height", strf("%d", p.height));

        KvSection bar;
        bar.name = "bar";
        bar.set("name", "altitude");
        Rect g = gauge_rect();
        bar.set("rect", strf("%d %d %d %d", g.x, g.y, g.w, g.h));
        bar.set("direction", "up");
        bar.set("fill", strf("%d %d %d", flappy_colors::kGaugeFill.r, flappy_colors::kGaugeFill.g,
                             flappy_colors::kGaugeFill.b));
        bar.set("tolerance", "30");
        kv.sections.push_back(bar);

        KvSection score;
        score.name = "score";
        Rect s = score_rect();
        score.set("rect", strf("%d %d %d %d", s.x, s.y, s.w, s.h));
        score.set("cells", "4");
        score.set("scale", "2");
        score.set("color", strf("%d %d %d", flappy_colors::kDigit.r, flappy_colors::kDigit.g,
                                flappy_colors::kDigit.b));
        score.set("tolerance", "30");
        kv.sections.push_back(score);

        auto flag = [&kv](const char* name, Rect r, Color c) {
            KvSection s;
            s.name = "flag";
            s.set("name", name);
            s.set("rect", strf("%d %d %d %d", r.x, r.y, r.w, r.h));
            s.set("color", strf("%d %d %d", c.r, c.g, c.b));
            s.set("tolerance", "30");
            s.set("coverage", "0.7");
            kv.sections.push_back(s);
        };
        flag("title", title_rect(), flappy_colors::kTitle);
        flag("death", death_rect(), flappy_colors::kDeath);
        return kv;
    }

    std::vector<SpriteTruth> sprite_truth() const override {
        const FlappyPhysics& p = cfg_.flappy;
        Frame f;
        std::vector<int> ids;
        render(f, &ids);
        return truth_from_id_buffer(ids, p.width, p.height,
                                    [](int id) { return id == 0 ? "bird" : "pipe"; });
    }

    struct Pipe {
        double x = 0;
        int gap_center = 0;
        bool scored = false;
    };

    // Oracle access for tests.
    double bird_y() const { return bird_y_; }
    const std::deque<Pipe>& pipes() const { return pipes_; }
    double altitude_fraction() const {
        const FlappyPhysics& p = cfg_.flappy;
        double cy = bird_y_ + p.bird_size / 2.0;
        double frac = (p.ground_y - cy) / double(p.ground_y);
        return std::clamp(frac, 0.0, 1.0);
    }
    int score() const { return score_; }

protected:
    void simulate_tick(const TickInput& in) override {
        if (phase_unlocked() == Phase::Ui) {
            if (in.edge("SPACE") || in.edge("ENTER") || in.clicks > 0) set_phase(Phase::Playing);
            return;
        }
        const FlappyPhysics& p = cfg_.flappy;

        if (in.edge("SPACE") || in.clicks > 0) vel_ = -p.flap_impulse;
        vel_ = std::min(vel_ + p.gravity, p.terminal_vel);
        bird_y_ += vel_;
        if (bird_y_ < 0) {
            bird_y_ = 0;
            vel_ = 0;
        }

        for (Pipe& pipe : pipes_) pipe.x -= p.scroll_speed;
        while (!pipes_.empty() && pipes_.front().x + p.pipe_width < -8) pipes_.pop_front();
        if (pipes_.empty() || pipes_.back().x < p.width - p.pipe_spacing) spawn_pipe();

        Rect bird{p.bird_x, int(std::lround(bird_y_)), p.bird_size, p.bird_size};
        if (bird.y + bird.h > p.ground_y) {
            set_phase(Phase::Dead);
            return;
        }
        for (Pipe& pipe : pipes_) {
            int x = int(std::lround(pipe.x));
            int gap_top = pipe.gap_center - p.gap_height / 2;
            int gap_bot = pipe.gap_center + p.gap_height / 2;
            bool overlap_x = bird.x < x + p.pipe_width && bird.x + bird.w > x;
            if (overlap_x && (bird.y < gap_top || bird.y + bird.h > gap_bot)) {
                set_phase(Phase::Dead);
                return;
            }
            if (!pipe.scored && x + p.pipe_width < bird.x) {
                pipe.scored = true;
                ++score_;
                push_event(ScoreEvent::PipePassed);
            }
        }
    }

private:
    Rect gauge_rect() const { return {2, 28, 4, cfg_.flappy.ground_y - 30}; }
    Rect score_rect() const { return {cfg_.flappy.width / 2 - 16, 4, 32, 12}; }
    Rect title_rect() const { return {cfg_.flappy.width / 2 - 30, 60, 60, 24}; }
    Rect death_rect() const { return {cfg_.flappy.width / 2 - 20, 70, 40, 14}; }

    static Rect clip(Rect r, Rect view) {
        int x0 = std::max(r.x, view.x), y0 = std::max(r.y, view.y);
        int x1 = std::min(r.x + r.w, view.x + view.w), y1 = std::min(r.y + r.h, view.y + view.h);
        return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
    }

    // Draws the frame; with a non-null `ids` buffer it also records per-pixel
    // ownership (entity id for sprites, -1 background, -2 HUD) so ground truth
    // sees exactly what the camera sees, occlusions included.
    void render(Frame& f, std::vector<int>* ids) const {
        const FlappyPhysics& p = cfg_.flappy;
        f.width = p.width;
        f.height = p.height;
        f.tick = tick();
        f.pixels.assign(size_t(p.width) * size_t(p.height) * 3, 0);
        if (ids) ids->assign(size_t(p.width) * size_t(p.height), -1);

        auto fill = [&](Rect r, Color c, int id) {
            f.fill_rect(r, c);
            if (!ids) return;
            Rect v = clip(r, {0, 0, p.width, p.height});
            for (int y = v.y; y < v.y + v.h; ++y)
                for (int x = v.x; x < v.x + v.w; ++x) (*ids)[size_t(y) * p.width + x] = id;
        };

        fill({0, 0, p.width, p.ground_y}, flappy_colors::kSky, -1);
        fill({0, p.ground_y, p.width, p.height - p.ground_y}, flappy_colors::kGround, -1);

        int eid = 1;
        for (const Pipe& pipe : pipes_) {
            int x = int(std::lround(pipe.x));
            int gap_top = pipe.gap_center - p.gap_height / 2;
            int gap_bot = pipe.gap_center + p.gap_height / 2;
            fill({x, 0, p.pipe_width, gap_top}, flappy_colors::kPipe, eid++);
            fill({x, gap_bot, p.pipe_width, p.ground_y - gap_bot}, flappy_colors::kPipe, eid++);
        }

        int by = int(std::lround(bird_y_));
        fill({p.bird_x, by, p.bird_size, p.bird_size}, flappy_colors::kBird, 0);

        // Altitude gauge, bottom-up fill.
        Rect gauge = gauge_rect();
        fill(gauge, flappy_colors::kGaugeBg, -2);
        double frac = altitude_fraction();
        int level = int(std::lround(frac * gauge.h));
        fill({gauge.x, gauge.y + gauge.h - level, gauge.w, level}, flappy_colors::kGaugeFill, -2);

        draw_score(f, score_, ids);

        Phase ph = phase();
        if (ph == Phase::Ui) fill(title_rect(), flappy_colors::kTitle, -2);
        if (ph == Phase::Dead) fill(death_rect(), flappy_colors::kDeath, -2);
    }

    void draw_score(Frame& f, int value, std::vector<int>* ids) const {
        Rect region = score_rect();
        std::string text = strf("%d", value);
        if (text.size() > 4) text = text.substr(text.size() - 4);
        const int scale = 2, stride = kDigitCols * 2 + 2;
        for (size_t i = 0; i < text.size(); ++i) {
            int d = text[i] - '0';
            int ox = region.x + int(i) * stride;
            for (int r = 0; r < kDigitRowsN; ++r)
                for (int c = 0; c < kDigitCols; ++c) {
                    if (!digit_pixel(d, r, c)) continue;
                    Rect cell{ox + c * scale, region.y + 1 + r * scale, scale, scale};
                    f.fill_rect(cell, flappy_colors::kDigit);
                    if (ids)
                        for (int y = cell.y; y < cell.y + cell.h; ++y)
                            for (int x = cell.x; x < cell.x + cell.w; ++x)
                                (*ids)[size_t(y) * f.width + x] = -2;
                }
        }
    }

    void reset_world() {
        const FlappyPhysics& p = cfg_.flappy;
        bird_y_ = p.ground_y / 2.0 - p.bird_size / 2.0;
        vel_ = 0;
        score_ = 0;
        pipes_.clear();
        first_pipe_x_ = p.width + 24;
        spawn_pipe();
    }

    void spawn_pipe() {
        const FlappyPhysics& p = cfg_.flappy;
        Pipe pipe;
        pipe.x = pipes_.empty() ? first_pipe_x_ : pipes_.back().x + p.pipe_spacing;
        int lo = p.gap_margin + p.gap_height / 2;
        int hi = p.ground_y - p.gap_margin - p.gap_height / 2;
        pipe.gap_center = lo + int(spawn_rng_.next_below(uint64_t(hi - lo + 1)));
        pipes_.push_back(pipe);
    }

    RngStream physics_rng_;  // reserved for future variation; keeps stream ids stable
    RngStream spawn_rng_;
    std::deque<Pipe> pipes_;
    double bird_y_ = 0;
    double vel_ = 0;
    double first_pipe_x_ = 0;
    int score_ = 0;
};

}  // namespace gamesense
