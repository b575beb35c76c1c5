/**
 * Server-side SVG rendering of chart options (no DOM, no browser).
 */

import * as echarts from "echarts";
import type { EChartsOption } from "echarts";

/**
 * The renderer embeds process-global instance counters in its CSS class
 * names; renumbering them by first appearance makes the output depend only
 * on the chart content.
 */
function normalizeClassNames(svg: string): string {
  const seen = new Map<string, string>();
  return svg.replace(/zr\d+-cls-\d+/g, (match) => {
    let stable = seen.get(match);
    if (stable === undefined) {
      stable = `zr-cls-${seen.size}`;
      seen.set(match, stable);
    }
    return stable;
  });
}

export function renderSvg(option: EChartsOption, width = 900, height = 560): string {
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width,
    height,
  });
  try {
    chart.setOption(option);
    return normalizeClassNames(chart.renderToSVGString());
  } finally {
    chart.dispose();
  }
}
