"""Build the channels of the reference scene and look at their scale."""
import numpy as np

from hrris_covert import ArraySpec, FadingSpec, SceneGeometry, build_channel_set, path_loss

geometry = SceneGeometry()              # Alice, surface, Bob and Willie on a 2-D plane
arrays = ArraySpec.for_elements(100)    # 4 antennas everywhere, 10 x 10 surface
fading = FadingSpec(rician_k_db=3.0, seed=1)

ch = build_channel_set(geometry, arrays, fading, noise_dbm=-80.0)

# every link carries its own path loss; the cascaded link is the product of two
for link in ("ar", "rb", "ab", "aw", "rw"):
    d = geometry.distance(link)
    pl = path_loss(d, geometry.pathloss_exponents[link], geometry.chi0_db)
    h = getattr(ch, f"h_{link}")
    print(f"{link}: shape {h.shape}, d = {d:5.1f} m, "
          f"mean |h|^2 = {np.mean(np.abs(h) ** 2):.3e} (path loss {pl:.3e})")

print("noise power at Bob:", ch.sigma_b_sq, "W")

# the same seed gives the same draw; a new seed gives a fresh one
again = build_channel_set(geometry, arrays, fading, noise_dbm=-80.0)
print("reproducible:", np.array_equal(ch.h_rb, again.h_rb))
